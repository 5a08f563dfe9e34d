use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::field::WignerField;
use super::grid::{signed_bin, PhaseSpaceGrid};
use crate::error::{Error, Result};

/// Eigenvalues in `[-NEGATIVE_FLOOR, 0)` are treated as round-off.
pub const NEGATIVE_FLOOR: f64 = 1e-8;

/// Position-representation density matrix `rho(x_i, x_j)` on the grid nodes.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
    hbar: f64,
    dx: f64,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<Complex64>, hbar: f64, dx: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::GridMismatch(format!("density matrix is {}x{}", entries.nrows(), entries.ncols())));
        }
        Ok(Self { entries, hbar, dx })
    }

    /// Projector onto a wavefunction sampled on the grid; `psi` need not be
    /// normalized.
    pub fn pure(psi: &[Complex64], hbar: f64, dx: f64) -> Self {
        let n2: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx;
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|c| c / n2.sqrt()));
        let entries = &v * v.adjoint();
        Self { entries, hbar, dx }
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// `sum_i rho_ii dx`.
    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|c| c.re).sum::<f64>() * self.dx
    }

    /// Largest entry of `rho - rho^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dimension();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                d = d.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// Weights of the state, i.e. eigenvalues of `rho dx`, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let m = self.entries.scale(self.dx);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `tr(rho^2)` with the grid measure.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dx * self.dx
    }
}

fn require_matched(grid: &PhaseSpaceGrid) -> Result<()> {
    if !grid.is_matched() {
        return Err(Error::GridMismatch(format!(
            "density transforms need a square grid with chord spacing equal to dx \
             (got nx = {}, np = {}, dx = {:.6e}, dy = {:.6e})",
            grid.nx(),
            grid.np(),
            grid.dx(),
            grid.dy()
        )));
    }
    Ok(())
}

/// Spectral half-sample shift of a periodic sequence: `sign = -1` maps
/// samples of `f(j + 1/2)` to `f(j)`, `sign = +1` the reverse.
struct HalfShift {
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    minus: Vec<Complex64>,
    scratch: Vec<Complex64>,
    n: usize,
}

impl HalfShift {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let minus = (0..n)
            .map(|k| Complex64::from_polar(1.0, -PI * signed_bin(k, n) as f64 / n as f64))
            .collect();
        Self { fwd, inv, minus, scratch: vec![Complex64::default(); len], n }
    }

    fn apply(&mut self, buf: &mut [Complex64], sign: i32) {
        self.fwd.process_with_scratch(buf, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        for (b, f) in buf.iter_mut().zip(&self.minus) {
            let f = if sign < 0 { *f } else { f.conj() };
            *b *= f * s;
        }
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }
}

/// Inverse Weyl transform onto the position grid.
///
/// On a matched grid the chord `y = m dx` joins nodes `m` apart: even `m`
/// lands on a node midpoint directly, odd `m` on a half-node midpoint that
/// is reached by a spectral half-sample shift along the diagonal band.
pub fn wigner_to_density(w: &WignerField) -> Result<DensityMatrix> {
    let g = w.grid();
    require_matched(g)?;
    let n = g.nx();
    let chord = w.chord();
    let mut rho = DMatrix::<Complex64>::zeros(n, n);
    let mut shift = HalfShift::new(n);
    let mut band = vec![Complex64::default(); n];
    for q in 0..n {
        let m = signed_bin(q, n);
        if m % 2 == 0 {
            let off = m / 2;
            for (j, b) in band.iter_mut().enumerate() {
                *b = chord[wrap(j as i64 + off, n) * n + q];
            }
        } else {
            let off = (m + 1) / 2;
            for (j, b) in band.iter_mut().enumerate() {
                *b = chord[wrap(j as i64 + off, n) * n + q];
            }
            shift.apply(&mut band, -1);
        }
        for (j, b) in band.iter().enumerate() {
            rho[(wrap(j as i64 + m, n), j)] = *b;
        }
    }
    let herm = (&rho + rho.adjoint()).scale(0.5);
    DensityMatrix::new(herm, g.hbar(), g.dx())
}

/// Forward Weyl transform, the exact inverse of [`wigner_to_density`].
pub fn density_to_wigner(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> Result<WignerField> {
    require_matched(grid)?;
    let n = grid.nx();
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if rho.dimension() != n || !rel(rho.dx(), grid.dx()) || !rel(rho.hbar(), grid.hbar()) {
        return Err(Error::GridMismatch(format!(
            "density matrix (n = {}, dx = {:.6e}, hbar = {}) does not match grid (n = {n}, dx = {:.6e}, hbar = {})",
            rho.dimension(),
            rho.dx(),
            rho.hbar(),
            grid.dx(),
            grid.hbar()
        )));
    }
    let e = rho.entries();
    let mut chord = vec![Complex64::default(); n * n];
    let mut shift = HalfShift::new(n);
    let mut band = vec![Complex64::default(); n];
    for q in 0..n {
        let m = signed_bin(q, n);
        for (j, b) in band.iter_mut().enumerate() {
            *b = e[(wrap(j as i64 + m, n), j)];
        }
        let off = if m % 2 == 0 {
            m / 2
        } else {
            shift.apply(&mut band, 1);
            (m + 1) / 2
        };
        for (j, b) in band.iter().enumerate() {
            chord[wrap(j as i64 + off, n) * n + q] = *b;
        }
    }
    WignerField::from_chord(*grid, &chord, 0.0)
}

fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}
