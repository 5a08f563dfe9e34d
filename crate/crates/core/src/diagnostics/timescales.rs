use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EnvironmentParams;

/// Ratio taken to mean "much less than" in the regime flags.
pub const MUCH_LESS: f64 = 0.1;

/// `sqrt(2 D / |lambda_minus|)`; undefined without contraction.
pub fn critical_dispersion(env: &EnvironmentParams, lambda_minus: f64) -> Option<f64> {
    if lambda_minus == 0.0 || !lambda_minus.is_finite() {
        return None;
    }
    Some((2.0 * env.diffusion() / lambda_minus.abs()).sqrt())
}

/// `hbar / sigma_c`; infinite when D is zero.
pub fn coherence_length(env: &EnvironmentParams, lambda_minus: f64) -> Option<f64> {
    critical_dispersion(env, lambda_minus).map(|s| if s == 0.0 { f64::INFINITY } else { env.hbar() / s })
}

/// Decoherence time for a separation `delta_x`, in two algebraically
/// equal forms when `D = 2 m gamma k_B T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceTime {
    pub delta_x: f64,
    /// `hbar^2 / (D dx^2)`, the e-folding time of the chord attenuation.
    pub from_diffusion: f64,
    /// `tau_R (lambda_dB / dx)^2`; absent when D is set directly.
    pub from_relaxation: Option<f64>,
}

pub fn decoherence_time(env: &EnvironmentParams, delta_x: f64) -> Result<DecoherenceTime> {
    if !(delta_x.is_finite() && delta_x > 0.0) {
        return Err(Error::InvalidParameter(format!("separation {delta_x} must be positive")));
    }
    let d = env.diffusion();
    let from_diffusion = if d == 0.0 { f64::INFINITY } else { env.hbar().powi(2) / (d * delta_x * delta_x) };
    let from_relaxation = match env.diffusion_override() {
        Some(_) => None,
        None => Some(env.tau_r() * (env.lambda_db() / delta_x).powi(2)),
    };
    Ok(DecoherenceTime { delta_x, from_diffusion, from_relaxation })
}

/// `ln(chi delta_p / hbar) / lambda` with the proportionality constant
/// set to one.
pub fn ehrenfest_time(lambda_plus: f64, chi: f64, delta_p: f64, hbar: f64) -> Result<f64> {
    let arg = chi * delta_p / hbar;
    if !(arg.is_finite() && arg >= 1.0) {
        return Err(Error::InvalidParameter(format!("chi * delta_p / hbar = {arg:.4e} must be finite and >= 1")));
    }
    if arg == 1.0 {
        return Ok(0.0);
    }
    if lambda_plus <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(arg.ln() / lambda_plus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationTime {
    /// `(H_eq / H_0) / rate`.
    pub ratio_form: f64,
    /// `(H_eq - H_0) / rate`.
    pub difference_form: f64,
}

pub fn equilibration_time(h_eq: f64, h_0: f64, rate: f64) -> EquilibrationTime {
    if rate <= 0.0 {
        let d = if h_eq == h_0 { 0.0 } else { f64::INFINITY };
        return EquilibrationTime { ratio_form: f64::INFINITY, difference_form: d };
    }
    let ratio_form = if h_0 == 0.0 { f64::INFINITY } else { (h_eq / h_0) / rate };
    EquilibrationTime { ratio_form, difference_form: (h_eq - h_0) / rate }
}

/// Transient rate for an initial momentum width relaxing onto sigma_c.
pub fn hdot_model(lambda_plus: f64, sigma_p0: f64, sigma_c: f64, t: f64) -> f64 {
    let r = (sigma_p0 / sigma_c).powi(2);
    lambda_plus / (1.0 + (r - 1.0) * (-2.0 * lambda_plus * t).exp())
}

/// Inputs to [`TimescaleReport::compute`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimescaleInputs {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Separation for the decoherence time.
    pub delta_x: f64,
    /// Nonlinearity scale used for t_chi and the regime flags.
    pub chi: f64,
    pub delta_p: f64,
    pub h_0: f64,
    pub h_eq: Option<f64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimescaleReport {
    pub tau_d: DecoherenceTime,
    pub tau_r: f64,
    pub t_chi: Option<f64>,
    pub t_chi_convention: String,
    pub chi_1: f64,
    pub delta_p: f64,
    pub t_eq: Option<EquilibrationTime>,
    pub h_eq: Option<f64>,
    pub h_0: f64,
    pub sigma_c: Option<f64>,
    pub coherence_length: Option<f64>,
    /// `chi / l`.
    pub chi_over_l: Option<f64>,
    /// `chi << l`: decoherence leaves the evolution quantum.
    pub coherent_regime: bool,
    /// `hbar << chi sigma_c`: local gradients suffice.
    pub classical_regime: bool,
}

impl TimescaleReport {
    pub fn compute(env: &EnvironmentParams, inputs: &TimescaleInputs) -> Result<Self> {
        let sigma_c = critical_dispersion(env, inputs.lambda_minus);
        let l = coherence_length(env, inputs.lambda_minus);
        let chi_over_l = l.map(|l| inputs.chi / l);
        let t_eq = match (inputs.h_eq, inputs.rate) {
            (Some(h), Some(r)) => Some(equilibration_time(h, inputs.h_0, r)),
            _ => None,
        };
        Ok(Self {
            tau_d: decoherence_time(env, inputs.delta_x)?,
            tau_r: env.tau_r(),
            t_chi: ehrenfest_time(inputs.lambda_plus, inputs.chi, inputs.delta_p, env.hbar()).ok(),
            t_chi_convention: "ln(chi * delta_p / hbar) / lambda_plus, proportionality constant 1".into(),
            chi_1: inputs.chi,
            delta_p: inputs.delta_p,
            t_eq,
            h_eq: inputs.h_eq,
            h_0: inputs.h_0,
            sigma_c,
            coherence_length: l,
            chi_over_l,
            coherent_regime: chi_over_l.is_some_and(|r| r < MUCH_LESS),
            classical_regime: sigma_c.is_some_and(|s| env.hbar() < MUCH_LESS * inputs.chi * s),
        })
    }
}
