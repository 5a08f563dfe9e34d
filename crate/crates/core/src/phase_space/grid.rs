use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform rectangular (x, p) grid with periodic spectral boundaries.
///
/// Samples sit at `x_min + i*dx` for `i in 0..nx` (the upper edge is the
/// periodic image of the lower one), likewise for p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    nx: usize,
    np: usize,
    x_min: f64,
    x_max: f64,
    p_min: f64,
    p_max: f64,
    hbar: f64,
}

impl PhaseSpaceGrid {
    pub fn new(nx: usize, np: usize, x_extent: [f64; 2], p_extent: [f64; 2], hbar: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("np", np)] {
            if n < 32 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be a power of two >= 32")));
            }
        }
        let [x_min, x_max] = x_extent;
        let [p_min, p_max] = p_extent;
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidGrid(format!("x extent [{x_min}, {x_max}] is empty or not finite")));
        }
        if !(p_min.is_finite() && p_max.is_finite() && p_max > p_min) {
            return Err(Error::InvalidGrid(format!("p extent [{p_min}, {p_max}] is empty or not finite")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidGrid(format!("hbar = {hbar} must be positive")));
        }
        let grid = Self { nx, np, x_min, x_max, p_min, p_max, hbar };
        let chord_span = nx as f64 * grid.dy();
        if chord_span < grid.x_length() * (1.0 - 1e-12) {
            return Err(Error::InvalidGrid(format!(
                "chord span nx*dy = {chord_span:.6} is shorter than the x extent {:.6}; \
                 narrow the momentum window or widen the position window",
                grid.x_length()
            )));
        }
        Ok(grid)
    }

    /// Square grid centred on the origin whose chord spacing equals the
    /// position spacing, i.e. `L * P = 2 pi hbar n`. Only matched grids
    /// support the density-matrix transforms.
    pub fn matched(n: usize, x_half_width: f64, hbar: f64) -> Result<Self> {
        let l = 2.0 * x_half_width;
        let p_half = PI * hbar * n as f64 / l;
        Self::new(n, n, [-x_half_width, x_half_width], [-p_half, p_half], hbar)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_extent(&self) -> [f64; 2] {
        [self.x_min, self.x_max]
    }

    pub fn p_extent(&self) -> [f64; 2] {
        [self.p_min, self.p_max]
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn x_length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn p_length(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn dx(&self) -> f64 {
        self.x_length() / self.nx as f64
    }

    pub fn dp(&self) -> f64 {
        self.p_length() / self.np as f64
    }

    /// Chord spacing conjugate to p.
    pub fn dy(&self) -> f64 {
        2.0 * PI * self.hbar / self.p_length()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p(j)).collect()
    }

    /// Chord value of FFT bin `q` along the momentum axis.
    pub fn y(&self, q: usize) -> f64 {
        signed_bin(q, self.np) as f64 * self.dy()
    }

    /// Wavenumber of FFT bin `q` along the position axis.
    pub fn k(&self, q: usize) -> f64 {
        2.0 * PI * signed_bin(q, self.nx) as f64 / self.x_length()
    }

    /// Phase-space cell area.
    pub fn cell(&self) -> f64 {
        self.dx() * self.dp()
    }

    pub fn is_matched(&self) -> bool {
        self.nx == self.np && ((self.dy() - self.dx()) / self.dx()).abs() < 1e-9
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.np + j
    }

    pub(crate) fn same_as(&self, other: &Self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        self.nx == other.nx
            && self.np == other.np
            && close(self.x_min, other.x_min)
            && close(self.x_max, other.x_max)
            && close(self.p_min, other.p_min)
            && close(self.p_max, other.p_max)
            && close(self.hbar, other.hbar)
    }
}

/// Map an FFT bin to its signed frequency index in `[-n/2, n/2)`.
pub fn signed_bin(q: usize, n: usize) -> i64 {
    if q < n / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}
