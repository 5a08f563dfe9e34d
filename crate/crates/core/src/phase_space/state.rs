use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{WignerField, EDGE_TOLERANCE};
use super::grid::PhaseSpaceGrid;
use crate::error::{Error, Result};

/// Relative slack on the uncertainty bound and on the purity test.
const PURITY_SLACK: f64 = 1e-9;

/// Gaussian phase-space state described by its first and second moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
    #[serde(default)]
    pub xp_correlation: f64,
}

impl GaussianSpec {
    /// Minimum-uncertainty state with the given position width.
    pub fn coherent(x0: f64, p0: f64, sigma_x: f64, hbar: f64) -> Self {
        Self { x0, p0, sigma_x, sigma_p: hbar / (2.0 * sigma_x), xp_correlation: 0.0 }
    }

    pub fn determinant(&self) -> f64 {
        self.sigma_x.powi(2) * self.sigma_p.powi(2) - self.xp_correlation.powi(2)
    }

    pub fn is_pure(&self, hbar: f64) -> bool {
        let bound = 0.25 * hbar * hbar;
        (self.determinant() - bound).abs() <= PURITY_SLACK * bound
    }

    /// `hbar / (2 sqrt(det))`.
    pub fn purity(&self, hbar: f64) -> f64 {
        hbar / (2.0 * self.determinant().sqrt())
    }

    pub fn validate(&self, hbar: f64) -> Result<()> {
        let finite = [self.x0, self.p0, self.sigma_x, self.sigma_p, self.xp_correlation].iter().all(|v| v.is_finite());
        if !finite || self.sigma_x <= 0.0 || self.sigma_p <= 0.0 {
            return Err(Error::InvalidParameter(format!("gaussian widths must be positive and finite: {self:?}")));
        }
        let det = self.determinant();
        let bound = 0.25 * hbar * hbar;
        if det < bound * (1.0 - PURITY_SLACK) {
            return Err(Error::IllegalCovariance { det, bound });
        }
        Ok(())
    }

    fn check_coverage(&self, grid: &PhaseSpaceGrid, x_centre: f64, what: &str) -> Result<()> {
        let [x_min, x_max] = grid.x_extent();
        let [p_min, p_max] = grid.p_extent();
        let (xl, xh) = (x_centre - 6.0 * self.sigma_x, x_centre + 6.0 * self.sigma_x);
        let (pl, ph) = (self.p0 - 6.0 * self.sigma_p, self.p0 + 6.0 * self.sigma_p);
        if xl < x_min || xh > x_max || pl < p_min || ph > p_max {
            return Err(Error::StateOutsideGrid(format!(
                "{what} needs x in [{xl:.4}, {xh:.4}] and p in [{pl:.4}, {ph:.4}] (six widths) but the grid spans \
                 [{x_min:.4}, {x_max:.4}] x [{p_min:.4}, {p_max:.4}]"
            )));
        }
        Ok(())
    }
}

/// Normalized Gaussian Wigner function with the moments of `spec`.
pub fn make_gaussian(spec: &GaussianSpec, grid: &PhaseSpaceGrid) -> Result<WignerField> {
    spec.validate(grid.hbar())?;
    spec.check_coverage(grid, spec.x0, "gaussian")?;
    let det = spec.determinant();
    let (sxx, spp, sxp) = (spec.sigma_x.powi(2), spec.sigma_p.powi(2), spec.xp_correlation);
    let amp = 1.0 / (2.0 * PI * det.sqrt());
    let w = WignerField::from_fn(*grid, 0.0, |x, p| {
        let (u, v) = (x - spec.x0, p - spec.p0);
        let q = (spp * u * u - 2.0 * sxp * u * v + sxx * v * v) / det;
        amp * (-0.5 * q).exp()
    });
    finish(w)
}

/// Equal superposition of two copies of a pure Gaussian displaced to
/// `x0 - x_sep/2` and `x0 + x_sep/2`.
pub fn make_cat(x_sep: f64, base: &GaussianSpec, grid: &PhaseSpaceGrid) -> Result<WignerField> {
    let hbar = grid.hbar();
    base.validate(hbar)?;
    if !base.is_pure(hbar) {
        return Err(Error::InvalidParameter(format!(
            "cat states need a pure base state; det = {:.6e}, (hbar/2)^2 = {:.6e}",
            base.determinant(),
            0.25 * hbar * hbar
        )));
    }
    if !x_sep.is_finite() || x_sep < 0.0 {
        return Err(Error::InvalidParameter(format!("separation {x_sep} must be finite and non-negative")));
    }
    let a = 0.5 * x_sep;
    base.check_coverage(grid, base.x0 - a, "left lobe")?;
    base.check_coverage(grid, base.x0 + a, "right lobe")?;
    if x_sep > 0.0 {
        let wavelength = 2.0 * PI * hbar / x_sep;
        if wavelength < 4.0 * grid.dp() {
            return Err(Error::FringeUndersampled { wavelength, spacing: grid.dp() });
        }
    }

    // Build the chord function psi(x + y/2) psi*(x - y/2) from the analytic
    // wavefunction and transform back; this is exact for any grid.
    let sx2 = base.sigma_x.powi(2);
    let chirp = base.xp_correlation / (2.0 * hbar * sx2);
    let lobe = |u: f64| Complex64::new(-u * u / (4.0 * sx2), chirp * u * u).exp();
    let psi = |x: f64| {
        let envelope = lobe(x - base.x0 - a) + lobe(x - base.x0 + a);
        envelope * Complex64::from_polar(1.0, base.p0 * (x - base.x0) / hbar)
    };
    let (nx, np) = (grid.nx(), grid.np());
    let mut chord = Vec::with_capacity(grid.len());
    for i in 0..nx {
        let x = grid.x(i);
        for q in 0..np {
            let y = grid.y(q);
            chord.push(psi(x + 0.5 * y) * psi(x - 0.5 * y).conj());
        }
    }
    finish(WignerField::from_chord(*grid, &chord, 0.0)?)
}

fn finish(w: WignerField) -> Result<WignerField> {
    let w = w.normalized()?;
    let edge = w.edge_ratio();
    if edge > EDGE_TOLERANCE {
        return Err(Error::StateOutsideGrid(format!(
            "state reaches {edge:.2e} of its peak on the grid boundary (tolerance {EDGE_TOLERANCE:.0e})"
        )));
    }
    let (chord_tail, k_tail) = w.spectral_tails();
    if chord_tail > EDGE_TOLERANCE || k_tail > EDGE_TOLERANCE {
        return Err(Error::Undersampled(format!(
            "Nyquist content {chord_tail:.2e} along the chord axis and {k_tail:.2e} along the wavenumber axis \
             (tolerance {EDGE_TOLERANCE:.0e}); refine the grid"
        )));
    }
    Ok(w)
}
