//! Classical trajectories, tangent dynamics and Lyapunov exponents.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::GaussianSpec;
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub x: f64,
    pub p: f64,
    pub t: f64,
}

impl TrajectoryState {
    pub fn new(x: f64, p: f64, t: f64) -> Self {
        Self { x, p, t }
    }

    pub fn energy(&self, spec: &PotentialSpec) -> f64 {
        0.5 * self.p * self.p / spec.mass + spec.eval(self.x, self.t)
    }
}

/// One velocity-Verlet step; kicks use the force at the start and end
/// times of the step.
pub fn verlet_step(s: &TrajectoryState, spec: &PotentialSpec, dt: f64) -> TrajectoryState {
    let ph = s.p - 0.5 * dt * spec.derivative(1, s.x, s.t);
    let x = s.x + dt * ph / spec.mass;
    let t = s.t + dt;
    let p = ph - 0.5 * dt * spec.derivative(1, x, t);
    TrajectoryState { x, p, t }
}

/// Trajectory of `n_steps + 1` states starting at `state`.
pub fn integrate(state: &TrajectoryState, spec: &PotentialSpec, dt: f64, n_steps: usize) -> Vec<TrajectoryState> {
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut s = *state;
    out.push(s);
    for _ in 0..n_steps {
        s = verlet_step(&s, spec, dt);
        out.push(s);
    }
    out
}

/// Push a deviation `[dx, dp]` through the Jacobian of one Verlet step
/// taken from `state`.
pub fn tangent_step(state: &TrajectoryState, deviation: [f64; 2], spec: &PotentialSpec, dt: f64) -> [f64; 2] {
    let [dx, dp] = deviation;
    let ph = state.p - 0.5 * dt * spec.derivative(1, state.x, state.t);
    let x1 = state.x + dt * ph / spec.mass;
    let dph = dp - 0.5 * dt * spec.derivative(2, state.x, state.t) * dx;
    let dx1 = dx + dt * dph / spec.mass;
    let dp1 = dph - 0.5 * dt * spec.derivative(2, x1, state.t + dt) * dx1;
    [dx1, dp1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    /// `(lambda_plus, lambda_minus)`.
    pub exponents: (f64, f64),
    /// `(t, running lambda_plus, running lambda_minus)`.
    pub convergence_history: Vec<(f64, f64, f64)>,
    pub averaging_time: f64,
    /// Max minus min of the running lambda_plus over the final quarter.
    pub final_quarter_spread: f64,
    pub converged: bool,
}

impl LyapunovSpectrum {
    pub fn lambda_plus(&self) -> f64 {
        self.exponents.0
    }

    pub fn lambda_minus(&self) -> f64 {
        self.exponents.1
    }

    /// Exponents fixed by hand, e.g. for an analytically known system.
    pub fn known(lambda_plus: f64, lambda_minus: f64) -> Self {
        Self {
            exponents: (lambda_plus, lambda_minus),
            convergence_history: Vec::new(),
            averaging_time: f64::INFINITY,
            final_quarter_spread: 0.0,
            converged: true,
        }
    }
}

/// Floor on the convergence tolerance so exponents near zero can converge.
pub const CONVERGENCE_FLOOR: f64 = 1e-3;

/// Benettin estimate with Gram-Schmidt re-orthonormalization every
/// `renorm_stride` steps.
pub fn benettin_spectrum(
    initial: &TrajectoryState,
    spec: &PotentialSpec,
    dt: f64,
    t_total: f64,
    renorm_stride: usize,
) -> Result<LyapunovSpectrum> {
    spec.validate()?;
    if !(dt > 0.0 && t_total > 0.0 && renorm_stride > 0) {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt}, t_total = {t_total}, renorm_stride = {renorm_stride} must all be positive"
        )));
    }
    let n_steps = (t_total / dt).round() as usize;
    let n_renorm = (n_steps / renorm_stride).max(1);
    let record_every = (n_renorm / 2000).max(1);

    let mut s = *initial;
    let mut v1 = [1.0, 0.0];
    let mut v2 = [0.0, 1.0];
    let (mut sum1, mut sum2) = (0.0, 0.0);
    let mut history = Vec::new();
    for r in 1..=n_renorm {
        for _ in 0..renorm_stride {
            v1 = tangent_step(&s, v1, spec, dt);
            v2 = tangent_step(&s, v2, spec, dt);
            s = verlet_step(&s, spec, dt);
        }
        if !(s.x.is_finite() && s.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("trajectory diverged at t = {:.4}", s.t)));
        }
        let n1 = v1[0].hypot(v1[1]);
        v1 = [v1[0] / n1, v1[1] / n1];
        let proj = v1[0] * v2[0] + v1[1] * v2[1];
        v2 = [v2[0] - proj * v1[0], v2[1] - proj * v1[1]];
        let n2 = v2[0].hypot(v2[1]);
        v2 = [v2[0] / n2, v2[1] / n2];
        sum1 += n1.ln();
        sum2 += n2.ln();
        if r % record_every == 0 || r == n_renorm {
            let t = (r * renorm_stride) as f64 * dt;
            history.push((t, sum1 / t, sum2 / t));
        }
    }
    let t_avg = (n_renorm * renorm_stride) as f64 * dt;
    // With both exponents near zero the Gram-Schmidt order can invert them.
    let (lp, lm) = if sum1 >= sum2 { (sum1 / t_avg, sum2 / t_avg) } else { (sum2 / t_avg, sum1 / t_avg) };
    let tail: Vec<f64> = history.iter().filter(|h| h.0 >= 0.75 * t_avg).map(|h| h.1).collect();
    let spread = if tail.len() > 1 {
        tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let converged = spread <= (0.1 * lp.abs()).max(CONVERGENCE_FLOOR);
    Ok(LyapunovSpectrum {
        exponents: (lp, lm),
        convergence_history: history,
        averaging_time: t_avg,
        final_quarter_spread: spread,
        converged,
    })
}

/// Mean and covariance of a cloud at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMoments {
    pub t: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub covariance: [[f64; 2]; 2],
}

impl EnsembleMoments {
    pub fn of(cloud: &[TrajectoryState]) -> Self {
        let n = cloud.len() as f64;
        let mx = cloud.iter().map(|s| s.x).sum::<f64>() / n;
        let mp = cloud.iter().map(|s| s.p).sum::<f64>() / n;
        let (mut xx, mut xp, mut pp) = (0.0, 0.0, 0.0);
        for s in cloud {
            let (u, v) = (s.x - mx, s.p - mp);
            xx += u * u;
            xp += u * v;
            pp += v * v;
        }
        let d = n - 1.0;
        Self {
            t: cloud.first().map_or(0.0, |s| s.t),
            mean_x: mx,
            mean_p: mp,
            covariance: [[xx / d, xp / d], [xp / d, pp / d]],
        }
    }
}

/// Evolve every member of `cloud` to time `t` (from each member's own
/// start time) and record the ensemble moments every `record_stride`
/// steps, including the first and last.
pub fn ensemble_spread(
    cloud: &[TrajectoryState],
    spec: &PotentialSpec,
    dt: f64,
    t: f64,
    record_stride: usize,
) -> Result<Vec<EnsembleMoments>> {
    if cloud.len() < 2 {
        return Err(Error::InvalidParameter("ensemble needs at least two members".into()));
    }
    if !(dt > 0.0 && record_stride > 0) {
        return Err(Error::InvalidParameter("dt and record_stride must be positive".into()));
    }
    let n = (t / dt).round() as usize;
    let mut members = cloud.to_vec();
    let mut out = vec![EnsembleMoments::of(&members)];
    for k in 1..=n {
        for m in members.iter_mut() {
            *m = verlet_step(m, spec, dt);
        }
        if k % record_stride == 0 || k == n {
            out.push(EnsembleMoments::of(&members));
        }
    }
    Ok(out)
}

/// Draw `n` points from the Gaussian with the moments of `spec`.
pub fn sample_gaussian_cloud(spec: &GaussianSpec, n: usize, seed: u64) -> Vec<TrajectoryState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = spec.sigma_x;
    let b = spec.xp_correlation / a;
    let c = (spec.sigma_p * spec.sigma_p - b * b).max(0.0).sqrt();
    (0..n)
        .map(|_| {
            let u: f64 = StandardNormal.sample(&mut rng);
            let v: f64 = StandardNormal.sample(&mut rng);
            TrajectoryState::new(spec.x0 + a * u, spec.p0 + b * u + c * v, 0.0)
        })
        .collect()
}
