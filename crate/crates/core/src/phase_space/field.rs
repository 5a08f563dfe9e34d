use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::PhaseSpaceGrid;
use crate::error::{Error, Result};
use crate::spectral::{transpose, Spectral};

/// Relative magnitude below which a state counts as vanished at the grid
/// boundary or at the Nyquist band of either transform.
pub const EDGE_TOLERANCE: f64 = 1e-12;

/// Real Wigner function sampled on a [`PhaseSpaceGrid`], stored row-major
/// with position as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    grid: PhaseSpaceGrid,
    values: Vec<f64>,
    time: f64,
}

/// First and second moments of a phase-space distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    /// `[[var_x, cov_xp], [cov_xp, var_p]]`
    pub covariance: [[f64; 2]; 2],
}

impl Moments {
    pub fn var_x(&self) -> f64 {
        self.covariance[0][0]
    }

    pub fn var_p(&self) -> f64 {
        self.covariance[1][1]
    }

    pub fn cov_xp(&self) -> f64 {
        self.covariance[0][1]
    }

    pub fn determinant(&self) -> f64 {
        self.var_x() * self.var_p() - self.cov_xp() * self.cov_xp()
    }
}

impl WignerField {
    pub fn new(grid: PhaseSpaceGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples supplied for a {}x{} grid",
                values.len(),
                grid.nx(),
                grid.np()
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: PhaseSpaceGrid, time: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.np() {
                values.push(f(x, grid.p(j)));
            }
        }
        Self { grid, values, time }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Integral of W over the grid.
    pub fn norm(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell()
    }

    /// `2 pi hbar` times the integral of W squared.
    pub fn purity(&self) -> f64 {
        let sq: f64 = self.values.iter().map(|w| w * w).sum();
        2.0 * PI * self.grid.hbar() * sq * self.grid.cell()
    }

    /// Rescale so the integral is one.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter(format!("cannot normalize a field with integral {n}")));
        }
        let s = 1.0 / n;
        self.values.iter_mut().for_each(|w| *w *= s);
        Ok(self)
    }

    /// Position marginal, integral of W over p.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = self.grid.dp();
        self.values.chunks(self.grid.np()).map(|row| row.iter().sum::<f64>() * dp).collect()
    }

    /// Momentum marginal, integral of W over x.
    pub fn p_marginal(&self) -> Vec<f64> {
        let np = self.grid.np();
        let mut out = vec![0.0; np];
        for row in self.values.chunks(np) {
            out.iter_mut().zip(row).for_each(|(o, w)| *o += w);
        }
        let dx = self.grid.dx();
        out.iter_mut().for_each(|o| *o *= dx);
        out
    }

    pub fn moments(&self) -> Moments {
        let g = &self.grid;
        let ps = g.ps();
        let (mut s0, mut sx, mut sp, mut sxx, mut sxp, mut spp) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, row) in self.values.chunks(g.np()).enumerate() {
            let x = g.x(i);
            let (mut r0, mut rp, mut rpp) = (0.0, 0.0, 0.0);
            for (w, p) in row.iter().zip(&ps) {
                r0 += w;
                rp += w * p;
                rpp += w * p * p;
            }
            s0 += r0;
            sx += x * r0;
            sxx += x * x * r0;
            sp += rp;
            sxp += x * rp;
            spp += rpp;
        }
        let mx = sx / s0;
        let mp = sp / s0;
        let vxx = sxx / s0 - mx * mx;
        let vxp = sxp / s0 - mx * mp;
        let vpp = spp / s0 - mp * mp;
        Moments { mean_x: mx, mean_p: mp, covariance: [[vxx, vxp], [vxp, vpp]] }
    }

    /// Largest absolute pointwise difference.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// Largest absolute value on the outermost rows and columns, relative
    /// to the largest value anywhere.
    pub fn edge_ratio(&self) -> f64 {
        let g = &self.grid;
        let (nx, np) = (g.nx(), g.np());
        let mut edge = 0.0f64;
        for j in 0..np {
            edge = edge.max(self.at(0, j).abs()).max(self.at(nx - 1, j).abs());
        }
        for i in 0..nx {
            edge = edge.max(self.at(i, 0).abs()).max(self.at(i, np - 1).abs());
        }
        edge / self.max_abs()
    }

    /// Chord representation `C(x, y) = integral W(x, p) exp(i p y / hbar) dp`,
    /// which equals `rho(x + y/2, x - y/2)`. Row-major, y in FFT bin order.
    pub fn chord(&self) -> Vec<Complex64> {
        let mut s = Spectral::new(self.grid.nx(), self.grid.np());
        self.chord_with(&mut s)
    }

    pub(crate) fn chord_with(&self, s: &mut Spectral) -> Vec<Complex64> {
        let g = &self.grid;
        let mut buf: Vec<Complex64> = self.values.iter().map(|&w| Complex64::new(w, 0.0)).collect();
        s.p_lane.inverse(&mut buf);
        let phase = chord_phase(g);
        let dp = g.dp();
        for row in buf.chunks_mut(g.np()) {
            row.iter_mut().zip(&phase).for_each(|(c, f)| *c *= f * dp);
        }
        buf
    }

    /// Inverse of [`WignerField::chord`]; the imaginary residue is dropped.
    pub fn from_chord(grid: PhaseSpaceGrid, chord: &[Complex64], time: f64) -> Result<Self> {
        if chord.len() != grid.len() {
            return Err(Error::GridMismatch(format!("chord array of {} entries for grid of {}", chord.len(), grid.len())));
        }
        let mut s = Spectral::new(grid.nx(), grid.np());
        let mut buf = chord.to_vec();
        let phase = chord_phase(&grid);
        for row in buf.chunks_mut(grid.np()) {
            row.iter_mut().zip(&phase).for_each(|(c, f)| *c *= f.conj());
        }
        s.p_lane.forward(&mut buf);
        let scale = grid.dy() / (2.0 * PI * grid.hbar());
        let values = buf.iter().map(|c| c.re * scale).collect();
        Ok(Self { grid, values, time })
    }

    /// Magnitudes at the Nyquist bins of the chord (p to y) and wavenumber
    /// (x to k) transforms, relative to the largest coefficient of each.
    /// Values near zero mean the grid resolves the state.
    pub fn spectral_tails(&self) -> (f64, f64) {
        let g = &self.grid;
        let (nx, np) = (g.nx(), g.np());
        let mut s = Spectral::new(nx, np);
        let buf: Vec<Complex64> = self.values.iter().map(|&w| Complex64::new(w, 0.0)).collect();

        let mut c = buf.clone();
        s.p_lane.inverse(&mut c);
        let c_max = c.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let c_nyq = (0..nx).fold(0.0f64, |m, i| m.max(c[i * np + np / 2].norm()));

        let mut t = vec![Complex64::default(); buf.len()];
        transpose(&buf, &mut t, nx, np);
        s.x_lane.forward(&mut t);
        let k_max = t.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let k_nyq = (0..np).fold(0.0f64, |m, j| m.max(t[j * nx + nx / 2].norm()));
        (c_nyq / c_max, k_nyq / k_max)
    }
}

/// `exp(i p_min y_q / hbar)` per chord bin.
fn chord_phase(g: &PhaseSpaceGrid) -> Vec<Complex64> {
    (0..g.np()).map(|q| Complex64::from_polar(1.0, g.p_extent()[0] * g.y(q) / g.hbar())).collect()
}
