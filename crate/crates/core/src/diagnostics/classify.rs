//! Chaotic versus regular classification from the entropy production rate.
//!
//! Two models are fitted to the log of the smoothed rate: a constant rate
//! and a power law `c t^alpha`. They are compared with a BIC-style score,
//! `n ln(RSS / n) + k ln n`, where the residual sum carries a noise floor
//! so that drifts smaller than the rate's own uncertainty are not counted
//! as evidence for the power law.

use serde::{Deserialize, Serialize};

use super::entropy::{finite_difference_rate, EntropySeries, RateSample};
use crate::classical::LyapunovSpectrum;
use crate::error::{Error, Result};

/// Exponents below this count as zero when picking a default time unit.
pub const LAMBDA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Decoherence and squeezing transient; nothing earlier is fitted.
    pub transient: f64,
    /// Explicit start of the fit window (defaults to `transient`).
    pub window_open: Option<f64>,
    /// Explicit end of the fit window (defaults to the saturation time).
    pub window_close: Option<f64>,
    /// Time unit for span checks and smoothing; defaults to `1/lambda_plus`.
    pub dynamical_time: Option<f64>,
    /// Width of the rate stencil; defaults to one dynamical time.
    pub smoothing_window: Option<f64>,
    /// Required series length after the transient, in dynamical times.
    pub min_span: f64,
    /// Minimum number of rate samples in any fitted window.
    pub min_points: usize,
    /// Saturation is declared once entropy comes within this many nats of
    /// its late-time plateau.
    pub saturation_margin: f64,
    /// Fraction of the series tail averaged to estimate `H_eq`.
    pub saturation_tail: f64,
    /// Relative band for growing the plateau backwards from the window end.
    pub plateau_tolerance: f64,
    pub ratio_band: [f64; 2],
    pub alpha_target: f64,
    pub alpha_tolerance: f64,
    /// Score differences at or below this are "comparable".
    pub comparable_score: f64,
    /// Relative rate uncertainty added to the log-residuals.
    pub rate_noise_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            transient: 0.0,
            window_open: None,
            window_close: None,
            dynamical_time: None,
            smoothing_window: None,
            min_span: 5.0,
            min_points: 8,
            saturation_margin: 1.0,
            saturation_tail: 0.1,
            plateau_tolerance: 0.2,
            ratio_band: [0.5, 1.5],
            alpha_target: -1.0,
            alpha_tolerance: 0.3,
            comparable_score: 2.0,
            rate_noise_floor: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Chaotic,
    Regular,
    Inconclusive,
}

/// Both model fits over one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFit {
    pub window: [f64; 2],
    pub points: usize,
    /// Geometric-mean rate (least squares in log space).
    pub rate: f64,
    /// RMS log-residual of the constant model.
    pub constant_residual: f64,
    pub power_coefficient: f64,
    pub alpha: f64,
    /// RMS log-residual of the power law.
    pub power_residual: f64,
    /// Constant-model score minus power-law score; positive favours the
    /// power law.
    pub score_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosVerdict {
    pub classification: Classification,
    pub plateau_rate: f64,
    pub plateau_ratio: f64,
    pub plateau_fit: WindowFit,
    pub decay_exponent: f64,
    pub decay_fit: WindowFit,
    pub lyapunov_reference: f64,
    pub fit_window: [f64; 2],
    pub h_eq: f64,
    pub saturation_time: f64,
    pub smoothing_window: f64,
    pub reason: String,
}

pub fn classify(series: &EntropySeries, spectrum: &LyapunovSpectrum, cfg: &FitConfig) -> Result<ChaosVerdict> {
    let lp = spectrum.lambda_plus();
    let t_dyn = cfg.dynamical_time.unwrap_or(if lp > LAMBDA_FLOOR { 1.0 / lp } else { 1.0 });
    let smoothing = cfg.smoothing_window.unwrap_or(t_dyn);
    let times = &series.times;
    let h = &series.von_neumann;
    let n = times.len();
    if n < 2 {
        return Err(Error::WindowTooShort("fewer than two entropy samples".into()));
    }
    let rates = finite_difference_rate(times, h, smoothing);

    let tail = ((n as f64 * cfg.saturation_tail).ceil() as usize).clamp(1, n);
    let h_eq = h[n - tail..].iter().sum::<f64>() / tail as f64;
    let t_sat = times.iter().zip(h).find(|(_, v)| **v >= h_eq - cfg.saturation_margin).map_or(times[n - 1], |(t, _)| *t);

    let t_end = times[n - 1];
    let open = cfg.window_open.unwrap_or(cfg.transient).max(cfg.transient).max(times[0]);
    let close = cfg.window_close.unwrap_or(t_sat).min(t_end);
    if t_end - cfg.transient < cfg.min_span * t_dyn {
        return Err(Error::WindowTooShort(format!(
            "series ends at t = {t_end:.4}, less than {} dynamical times ({t_dyn:.4} each) after the transient at {:.4}",
            cfg.min_span, cfg.transient
        )));
    }
    if close <= open {
        return Err(Error::SaturatedBeforeWindow { open, saturation: close });
    }
    let in_window: Vec<RateSample> =
        rates.iter().copied().filter(|r| r.t >= open - 1e-12 && r.t <= close + 1e-12 && !r.one_sided).collect();
    let positive: Vec<RateSample> = in_window.iter().copied().filter(|r| r.rate > 0.0).collect();
    if positive.len() < cfg.min_points {
        return Err(Error::WindowTooShort(format!(
            "{} usable rate samples in [{open:.4}, {close:.4}], need {}",
            positive.len(),
            cfg.min_points
        )));
    }

    let decay_fit = fit_window(&positive, cfg.rate_noise_floor);
    let plateau_pts = anchored_plateau(&positive, cfg.plateau_tolerance);
    let plateau_fit = fit_window(&plateau_pts, cfg.rate_noise_floor);
    let plateau_ratio = if lp > LAMBDA_FLOOR { plateau_fit.rate / lp } else { f64::INFINITY };

    let regular = decay_fit.score_difference > cfg.comparable_score
        && (decay_fit.alpha - cfg.alpha_target).abs() <= cfg.alpha_tolerance;
    let plateau_long = plateau_pts.len() >= cfg.min_points;
    let constant_wins = plateau_fit.score_difference < -cfg.comparable_score;
    let in_band = plateau_ratio >= cfg.ratio_band[0] && plateau_ratio <= cfg.ratio_band[1];
    let chaotic = plateau_long && constant_wins && in_band;

    let (classification, reason) = match (chaotic, regular) {
        (true, false) => (Classification::Chaotic, format!("constant rate {:.4} = {:.3} lambda_plus up to saturation", plateau_fit.rate, plateau_ratio)),
        (false, true) => (Classification::Regular, format!("power law with alpha = {:.3}", decay_fit.alpha)),
        (true, true) => (Classification::Inconclusive, "both a plateau and a t^-1 decay fit".to_string()),
        (false, false) => {
            let mut why = Vec::new();
            if !plateau_long {
                why.push(format!("plateau only {} samples", plateau_pts.len()));
            }
            if !constant_wins {
                why.push(format!("plateau score difference {:.2} not decisive", plateau_fit.score_difference));
            }
            if !in_band {
                why.push(format!("plateau ratio {plateau_ratio:.3} outside [{}, {}]", cfg.ratio_band[0], cfg.ratio_band[1]));
            }
            if decay_fit.score_difference <= cfg.comparable_score {
                why.push(format!("power law not decisive (score difference {:.2})", decay_fit.score_difference));
            } else {
                why.push(format!("alpha = {:.3} outside {} +- {}", decay_fit.alpha, cfg.alpha_target, cfg.alpha_tolerance));
            }
            (Classification::Inconclusive, why.join("; "))
        }
    };

    Ok(ChaosVerdict {
        classification,
        plateau_rate: plateau_fit.rate,
        plateau_ratio,
        plateau_fit,
        decay_exponent: decay_fit.alpha,
        decay_fit,
        lyapunov_reference: lp,
        fit_window: [open, close],
        h_eq,
        saturation_time: t_sat,
        smoothing_window: smoothing,
        reason,
    })
}

/// Longest run ending at the last sample whose rates stay within
/// `tolerance` of the run's own mean.
fn anchored_plateau(pts: &[RateSample], tolerance: f64) -> Vec<RateSample> {
    let mut sum = 0.0;
    let mut start = pts.len();
    for (k, r) in pts.iter().enumerate().rev() {
        let count = (pts.len() - k) as f64;
        let mean = (sum + r.rate) / count;
        let members = &pts[k..];
        if members.iter().any(|m| (m.rate / mean - 1.0).abs() > tolerance) {
            break;
        }
        sum += r.rate;
        start = k;
    }
    pts[start..].to_vec()
}

fn fit_window(pts: &[RateSample], floor: f64) -> WindowFit {
    let n = pts.len();
    let window = [pts.first().map_or(f64::NAN, |p| p.t), pts.last().map_or(f64::NAN, |p| p.t)];
    if n < 2 {
        let rate = pts.first().map_or(f64::NAN, |p| p.rate);
        return WindowFit {
            window,
            points: n,
            rate,
            constant_residual: 0.0,
            power_coefficient: rate,
            alpha: 0.0,
            power_residual: 0.0,
            score_difference: 0.0,
        };
    }
    let nf = n as f64;
    let lx: Vec<f64> = pts.iter().map(|p| p.t.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.rate.ln()).collect();
    let my = ly.iter().sum::<f64>() / nf;
    let mx = lx.iter().sum::<f64>() / nf;
    let rss_c: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - alpha * mx;
    let rss_p: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - alpha * x).powi(2)).sum();
    let noise = nf * floor * floor;
    let score = |rss: f64, k: f64| nf * ((rss + noise) / nf).ln() + k * nf.ln();
    WindowFit {
        window,
        points: n,
        rate: my.exp(),
        constant_residual: (rss_c / nf).sqrt(),
        power_coefficient: intercept.exp(),
        alpha,
        power_residual: (rss_p / nf).sqrt(),
        score_difference: score(rss_c, 1.0) - score(rss_p, 2.0),
    }
}
