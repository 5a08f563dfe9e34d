//! Polynomial potentials with an additive linear drive `A x cos(w t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// `c_0 .. c_K` of `sum c_k x^k`.
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub drive_amplitude: f64,
    #[serde(default)]
    pub drive_frequency: f64,
    #[serde(default = "unit")]
    pub mass: f64,
}

fn unit() -> f64 {
    1.0
}

impl PotentialSpec {
    pub fn new(coefficients: Vec<f64>, drive_amplitude: f64, drive_frequency: f64, mass: f64) -> Result<Self> {
        let s = Self { coefficients, drive_amplitude, drive_frequency, mass };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.len() > MAX_DEGREE + 1 {
            return Err(Error::InvalidParameter(format!(
                "polynomial degree {} exceeds {MAX_DEGREE}",
                self.coefficients.len() - 1
            )));
        }
        if !self.coefficients.iter().chain([&self.drive_amplitude, &self.drive_frequency]).all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("potential coefficients must be finite".into()));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass {} must be positive", self.mass)));
        }
        Ok(())
    }

    /// `x^2 / 2`.
    pub fn harmonic() -> Self {
        Self { coefficients: vec![0.0, 0.0, 0.5], drive_amplitude: 0.0, drive_frequency: 0.0, mass: 1.0 }
    }

    /// `-lambda^2 x^2 / 2`, stretching rate `lambda` for unit mass.
    pub fn inverted(lambda: f64) -> Self {
        Self {
            coefficients: vec![0.0, 0.0, -0.5 * lambda * lambda],
            drive_amplitude: 0.0,
            drive_frequency: 0.0,
            mass: 1.0,
        }
    }

    /// `x^4/4 - x^2/2 + A x cos(w t)`.
    pub fn double_well_driven(amplitude: f64, frequency: f64) -> Self {
        Self {
            coefficients: vec![0.0, 0.0, -0.5, 0.0, 0.25],
            drive_amplitude: amplitude,
            drive_frequency: frequency,
            mass: 1.0,
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn is_driven(&self) -> bool {
        self.drive_amplitude != 0.0
    }

    /// Force-field coefficient of the drive at time t, `A cos(w t)`.
    pub fn drive(&self, t: f64) -> f64 {
        self.drive_amplitude * (self.drive_frequency * t).cos()
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.static_derivative(0, x) + self.drive(t) * x
    }

    /// n-th x-derivative of the static polynomial alone.
    pub fn static_derivative(&self, n: usize, x: f64) -> f64 {
        let c = &self.coefficients;
        if n >= c.len() {
            return 0.0;
        }
        // Horner on the differentiated coefficients k!/(k-n)! c_k.
        let mut acc = 0.0;
        for k in (n..c.len()).rev() {
            acc = acc * x + c[k] * falling(k, n);
        }
        acc
    }

    /// Exact n-th derivative of V(x, t); order 0 is the value.
    pub fn derivative(&self, n: usize, x: f64, t: f64) -> f64 {
        match n {
            0 => self.eval(x, t),
            1 => self.static_derivative(1, x) + self.drive(t),
            _ => self.static_derivative(n, x),
        }
    }

    /// `V(x + y/2) - V(x - y/2)` for the static polynomial, summed as the
    /// odd Taylor terms `2 V^(j)(x) (y/2)^j / j!` for `j <= max_order`.
    /// Passing `usize::MAX` gives the exact difference without the
    /// cancellation of subtracting two large values.
    pub fn static_odd_difference(&self, x: f64, y: f64, max_order: usize) -> f64 {
        let top = self.degree().min(max_order);
        let h = 0.5 * y;
        let mut sum = 0.0;
        let mut pow = h;
        let mut fact = 1.0;
        let mut j = 1;
        while j <= top {
            sum += 2.0 * self.static_derivative(j, x) * pow / fact;
            pow *= h * h;
            fact *= ((j + 1) * (j + 2)) as f64;
            j += 2;
        }
        sum
    }

    /// `chi_n = |V' / V^(2n+1)|^(1/2n)`, +inf when the higher derivative
    /// vanishes at the point.
    pub fn nonlinearity_scale(&self, n: usize, x: f64, t: f64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidParameter("nonlinearity index starts at 1".into()));
        }
        let high = self.derivative(2 * n + 1, x, t);
        if high == 0.0 {
            return Ok(f64::INFINITY);
        }
        let grad = self.derivative(1, x, t);
        if grad == 0.0 {
            return Err(Error::ZeroGradient { x });
        }
        Ok((grad / high).abs().powf(1.0 / (2 * n) as f64))
    }

    /// Upper bound on |V'(x, t)| over `[a, b]` and all t.
    pub fn max_gradient(&self, a: f64, b: f64) -> f64 {
        const SAMPLES: usize = 8192;
        let mut m = 0.0f64;
        for i in 0..=SAMPLES {
            let x = a + (b - a) * i as f64 / SAMPLES as f64;
            m = m.max(self.static_derivative(1, x).abs());
        }
        m + self.drive_amplitude.abs()
    }
}

fn falling(k: usize, n: usize) -> f64 {
    ((k - n + 1)..=k).fold(1.0, |a, i| a * i as f64)
}
