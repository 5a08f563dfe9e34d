//! Batched FFT helpers over the two grid axes.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse plans for one transform length plus scratch space.
pub(crate) struct Lane {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Lane {
    pub(crate) fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self { fwd, inv, scratch: vec![Complex64::default(); len] }
    }

    /// Unnormalized forward transform (`exp(-2 pi i ...)`) of every
    /// contiguous row of length n in `buf`.
    pub(crate) fn forward(&mut self, buf: &mut [Complex64]) {
        self.fwd.process_with_scratch(buf, &mut self.scratch);
    }

    /// Unnormalized inverse transform (`exp(+2 pi i ...)`) of every row.
    pub(crate) fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }
}

/// Plans for both axes of an `nx` by `np` row-major field.
pub(crate) struct Spectral {
    pub(crate) p_lane: Lane,
    pub(crate) x_lane: Lane,
}

impl Spectral {
    pub(crate) fn new(nx: usize, np: usize) -> Self {
        let mut planner = FftPlanner::new();
        let p_lane = Lane::new(&mut planner, np);
        let x_lane = Lane::new(&mut planner, nx);
        Self { p_lane, x_lane }
    }
}

/// Transpose a row-major `rows` x `cols` matrix into `dst` (`cols` x `rows`).
pub(crate) fn transpose<T: Copy>(src: &[T], dst: &mut [T], rows: usize, cols: usize) {
    const B: usize = 32;
    debug_assert_eq!(src.len(), rows * cols);
    debug_assert_eq!(dst.len(), rows * cols);
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}
