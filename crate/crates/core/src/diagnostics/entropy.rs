use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Observer, Sample};
use crate::phase_space::{wigner_to_density, WignerField, NEGATIVE_FLOOR};

/// Weights below this do not contribute to the von Neumann sum.
pub const WEIGHT_CUTOFF: f64 = 1e-15;

/// `-ln(2 pi hbar integral W^2)`.
pub fn linear_entropy(w: &WignerField) -> f64 {
    -w.purity().ln()
}

/// Entropy of a spectrum of weights after clipping round-off negatives.
pub fn spectrum_entropy(weights: &[f64]) -> Result<f64> {
    let min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVE_FLOOR {
        return Err(Error::NegativeSpectrum(min));
    }
    Ok(-weights.iter().filter(|&&p| p > WEIGHT_CUTOFF).map(|&p| p * p.ln()).sum::<f64>())
}

/// von Neumann entropy of the density matrix of `w`, in nats.
pub fn von_neumann_entropy(w: &WignerField) -> Result<f64> {
    Ok(von_neumann_with_spectrum(w)?.0)
}

/// Entropy together with the smallest eigenvalue seen.
pub fn von_neumann_with_spectrum(w: &WignerField) -> Result<(f64, f64)> {
    let spec = wigner_to_density(w)?.spectrum();
    let s = spectrum_entropy(&spec)?;
    Ok((s, spec.first().copied().unwrap_or(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    pub t: f64,
    pub rate: f64,
    /// True when the stencil could not be centred (series endpoints).
    pub one_sided: bool,
}

/// Finite-difference slope of `values` over a stencil about `window` wide,
/// centred where the series allows it.
pub fn finite_difference_rate(times: &[f64], values: &[f64], window: f64) -> Vec<RateSample> {
    let n = times.len().min(values.len());
    if n < 2 {
        return Vec::new();
    }
    let spacing = (times[n - 1] - times[0]) / (n - 1) as f64;
    let half = ((0.5 * window / spacing).round() as usize).max(1);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let rate = (values[hi] - values[lo]) / (times[hi] - times[lo]);
            RateSample { t: times[i], rate, one_sided: hi - i != i - lo }
        })
        .collect()
}

/// Entropy time series of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub times: Vec<f64>,
    pub linear_entropy: Vec<f64>,
    pub von_neumann: Vec<f64>,
    /// Smallest density-matrix eigenvalue per sample (before clipping).
    pub min_eigenvalue: Vec<f64>,
    pub rate_estimates: Vec<RateSample>,
    pub smoothing_window: f64,
    pub h0: f64,
}

impl EntropySeries {
    pub fn new(times: Vec<f64>, linear_entropy: Vec<f64>, von_neumann: Vec<f64>, smoothing_window: f64) -> Result<Self> {
        let n = times.len();
        if linear_entropy.len() != n || von_neumann.len() != n {
            return Err(Error::InvalidParameter("entropy series columns differ in length".into()));
        }
        if n == 0 {
            return Err(Error::WindowTooShort("empty entropy series".into()));
        }
        if times.iter().chain(&linear_entropy).chain(&von_neumann).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("entropy series contains non-finite entries".into()));
        }
        let rate_estimates = finite_difference_rate(&times, &von_neumann, smoothing_window);
        let h0 = von_neumann[0];
        Ok(Self { min_eigenvalue: vec![0.0; n], times, linear_entropy, von_neumann, rate_estimates, smoothing_window, h0 })
    }

    /// Series with only the von Neumann column known; the linear column
    /// repeats it.
    pub fn from_von_neumann(times: Vec<f64>, von_neumann: Vec<f64>, smoothing_window: f64) -> Result<Self> {
        Self::new(times, von_neumann.clone(), von_neumann, smoothing_window)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Recompute the rate column with another window.
    pub fn with_window(mut self, smoothing_window: f64) -> Self {
        self.rate_estimates = finite_difference_rate(&self.times, &self.von_neumann, smoothing_window);
        self.smoothing_window = smoothing_window;
        self
    }

    /// Largest violation of `von_neumann >= linear_entropy`.
    pub fn majorization_gap(&self) -> f64 {
        self.linear_entropy.iter().zip(&self.von_neumann).map(|(l, v)| l - v).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Smoothed `dH/dt` of the von Neumann column.
pub fn entropy_rate(series: &EntropySeries, smoothing_window: f64) -> Vec<RateSample> {
    finite_difference_rate(&series.times, &series.von_neumann, smoothing_window)
}

/// Observer that diagonalizes the density matrix at every sample.
#[derive(Debug, Default, Clone)]
pub struct EntropyRecorder {
    pub times: Vec<f64>,
    pub linear: Vec<f64>,
    pub von_neumann: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
}

impl EntropyRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_series(self, smoothing_window: f64) -> Result<EntropySeries> {
        let mut s = EntropySeries::new(self.times, self.linear, self.von_neumann, smoothing_window)?;
        s.min_eigenvalue = self.min_eigenvalue;
        Ok(s)
    }
}

impl Observer for EntropyRecorder {
    fn on_sample(&mut self, w: &WignerField, sample: &Sample) -> Result<()> {
        let (s, min) = von_neumann_with_spectrum(w)?;
        self.times.push(sample.t);
        self.linear.push(-sample.purity.ln());
        self.von_neumann.push(s);
        self.min_eigenvalue.push(min);
        Ok(())
    }
}
