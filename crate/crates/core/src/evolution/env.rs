use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bath parameters. With `gamma = 0` the momentum diffusion may be set
/// directly, which is the reversible classical limit (decoherence without
/// dissipation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    gamma: f64,
    temperature: f64,
    mass: f64,
    hbar: f64,
    diffusion_override: Option<f64>,
}

impl EnvironmentParams {
    pub fn new(gamma: f64, temperature: f64, mass: f64, hbar: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite();
        if !(ok(gamma) && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} must be finite and >= 0")));
        }
        if !(ok(temperature) && temperature > 0.0) {
            return Err(Error::InvalidParameter(format!("temperature = {temperature} must be positive")));
        }
        if !(ok(mass) && mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass = {mass} must be positive")));
        }
        if !(ok(hbar) && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar = {hbar} must be positive")));
        }
        Ok(Self { gamma, temperature, mass, hbar, diffusion_override: None })
    }

    /// Fix D directly; only allowed when gamma is zero.
    pub fn with_diffusion(mut self, diffusion: f64) -> Result<Self> {
        if self.gamma != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "a direct diffusion value needs gamma = 0 (got gamma = {}); with gamma > 0, D = 2 m gamma T is fixed",
                self.gamma
            )));
        }
        if !(diffusion.is_finite() && diffusion >= 0.0) {
            return Err(Error::InvalidParameter(format!("diffusion = {diffusion} must be finite and >= 0")));
        }
        self.diffusion_override = Some(diffusion);
        Ok(self)
    }

    /// Closed system: no friction, no diffusion.
    pub fn closed(mass: f64, hbar: f64) -> Result<Self> {
        Self::new(0.0, 1.0, mass, hbar)?.with_diffusion(0.0)
    }

    /// Reversible classical limit with the given diffusion constant.
    pub fn reversible(diffusion: f64, mass: f64, hbar: f64) -> Result<Self> {
        Self::new(0.0, 1.0, mass, hbar)?.with_diffusion(diffusion)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn diffusion_override(&self) -> Option<f64> {
        self.diffusion_override
    }

    /// `D = 2 m gamma k_B T`, or the override.
    pub fn diffusion(&self) -> f64 {
        self.diffusion_override.unwrap_or(2.0 * self.mass * self.gamma * self.temperature)
    }

    /// `1 / gamma`; infinite without friction.
    pub fn tau_r(&self) -> f64 {
        if self.gamma == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.gamma
        }
    }

    /// Thermal de Broglie wavelength `(hbar^2 / 2 m k_B T)^(1/2)`.
    pub fn lambda_db(&self) -> f64 {
        (self.hbar * self.hbar / (2.0 * self.mass * self.temperature)).sqrt()
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar = {hbar} must be positive")));
        }
        self.hbar = hbar;
        Ok(self)
    }
}
