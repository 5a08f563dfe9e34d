//! Strang-split spectral propagator.
//!
//! Kinetic shear is diagonal in (k, p); potential kicks and momentum
//! diffusion are diagonal in the chord plane (x, y). The two
//! half-potential steps and the diffusion step commute, so they are applied
//! as one multiplication per step, and adjacent half-kinetic steps are
//! merged across step boundaries.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::env::EnvironmentParams;
use crate::error::{Error, Result};
use crate::phase_space::{PhaseSpaceGrid, WignerField};
use crate::potential::PotentialSpec;
use crate::spectral::{transpose, Spectral};

/// How the potential enters the Wigner equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketMode {
    /// Full Moyal bracket, exact for polynomial potentials.
    MoyalExact,
    /// Classical Liouville flow.
    Poisson,
    /// Moyal series through order hbar^(2n).
    Truncated(usize),
}

impl BracketMode {
    /// Highest odd derivative order kept in the chord kernel.
    pub fn max_order(self) -> usize {
        match self {
            BracketMode::MoyalExact => usize::MAX,
            BracketMode::Poisson => 1,
            BracketMode::Truncated(n) => 2 * n + 1,
        }
    }

    pub fn validate(self) -> Result<()> {
        if let BracketMode::Truncated(0) = self {
            return Err(Error::InvalidParameter("truncated bracket needs n_max >= 1".into()));
        }
        Ok(())
    }
}

/// Largest dt for which neither the potential kick nor the kinetic shear
/// wraps around its conjugate axis within one step.
pub fn stability_limit(grid: &PhaseSpaceGrid, potential: &PotentialSpec) -> f64 {
    let [a, b] = grid.x_extent();
    let g = potential.max_gradient(a, b);
    let pot = if g > 0.0 { PI * grid.hbar() / (grid.dy() * g) } else { f64::INFINITY };
    let [p0, p1] = grid.p_extent();
    let pmax = p0.abs().max(p1.abs());
    let kin = if pmax > 0.0 { potential.mass * 0.5 * grid.x_length() / pmax } else { f64::INFINITY };
    pot.min(kin)
}

/// Default step: a quarter of the stability limit.
pub fn default_dt(grid: &PhaseSpaceGrid, potential: &PotentialSpec) -> f64 {
    0.25 * stability_limit(grid, potential)
}

fn check_dt(grid: &PhaseSpaceGrid, potential: &PotentialSpec, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be finite and >= 0")));
    }
    let [a, b] = grid.x_extent();
    let g = potential.max_gradient(a, b);
    let pot = if g > 0.0 { PI * grid.hbar() / (grid.dy() * g) } else { f64::INFINITY };
    if dt > pot {
        return Err(Error::TimestepTooLarge { dt, limit: pot, which: "potential kernel" });
    }
    let limit = stability_limit(grid, potential);
    if dt > limit {
        return Err(Error::TimestepTooLarge { dt, limit, which: "kinetic shear" });
    }
    Ok(())
}

/// Reusable propagator for one (grid, potential, environment, dt) setup.
pub struct Propagator {
    grid: PhaseSpaceGrid,
    potential: PotentialSpec,
    mode: BracketMode,
    dt: f64,
    hbar: f64,
    fft: Spectral,
    /// Transposed layout `[j * nx + q]`, includes the 1/nx normalization.
    kin_half: Vec<Complex64>,
    kin_full: Vec<Complex64>,
    /// `[i * np + q]`, includes 1/np. Without friction this carries the
    /// full-step static potential phase and the diffusion factor; with
    /// friction it carries a half-step potential phase only.
    chord_static: Vec<Complex64>,
    ys: Vec<f64>,
    friction: Option<Friction>,
    buf: Vec<Complex64>,
    tbuf: Vec<Complex64>,
}

struct Friction {
    /// `W'(p_j) = sum_l map[j, l] W(p_l)`.
    map: DMatrix<f64>,
    /// Ornstein-Uhlenbeck chord attenuation per y bin. The 1/np
    /// normalization comes with the potential half step applied after it.
    ou: Vec<f64>,
}

impl Propagator {
    pub fn new(
        grid: &PhaseSpaceGrid,
        potential: &PotentialSpec,
        env: &EnvironmentParams,
        mode: BracketMode,
        dt: f64,
        friction: bool,
    ) -> Result<Self> {
        potential.validate()?;
        mode.validate()?;
        if (env.mass() - potential.mass).abs() > 1e-12 * env.mass() {
            return Err(Error::InvalidParameter(format!(
                "environment mass {} differs from potential mass {}",
                env.mass(),
                potential.mass
            )));
        }
        if (env.hbar() - grid.hbar()).abs() > 1e-12 * grid.hbar() {
            return Err(Error::GridMismatch(format!("environment hbar {} differs from grid hbar {}", env.hbar(), grid.hbar())));
        }
        check_dt(grid, potential, dt)?;
        let (nx, np) = (grid.nx(), grid.np());
        let hbar = grid.hbar();
        let m = potential.mass;

        let kin = |frac: f64| {
            let mut v = Vec::with_capacity(nx * np);
            for j in 0..np {
                let p = grid.p(j);
                for q in 0..nx {
                    let phase = -grid.k(q) * p * frac * dt / m;
                    v.push(Complex64::from_polar(1.0 / nx as f64, phase));
                }
            }
            v
        };
        let kin_half = kin(0.5);
        let kin_full = kin(1.0);

        let ys: Vec<f64> = (0..np).map(|q| grid.y(q)).collect();
        let d = env.diffusion();
        let gamma = env.gamma();
        let with_friction = friction && gamma > 0.0;
        let (pot_dt, diff_dt) = if with_friction { (0.5 * dt, 0.0) } else { (dt, dt) };
        let mut chord_static = Vec::with_capacity(nx * np);
        let order = mode.max_order();
        for i in 0..nx {
            let x = grid.x(i);
            for &y in &ys {
                let dv = potential.static_odd_difference(x, y, order);
                let amp = (-d * y * y * diff_dt / (hbar * hbar)).exp() / np as f64;
                chord_static.push(Complex64::from_polar(amp, -dv * pot_dt / hbar));
            }
        }

        let friction = if with_friction {
            let s = (2.0 * gamma * dt).exp();
            let eff = (1.0 - (-4.0 * gamma * dt).exp()) / (4.0 * gamma);
            let ou = ys.iter().map(|y| (-d * y * y * eff / (hbar * hbar)).exp()).collect();
            Some(Friction { map: friction_map(grid, s), ou })
        } else {
            None
        };

        Ok(Self {
            grid: *grid,
            potential: potential.clone(),
            mode,
            dt,
            hbar,
            fft: Spectral::new(nx, np),
            kin_half,
            kin_full,
            chord_static,
            ys,
            friction,
            buf: vec![Complex64::default(); nx * np],
            tbuf: vec![Complex64::default(); nx * np],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mode(&self) -> BracketMode {
        self.mode
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    /// One full Strang step.
    pub fn step(&mut self, w: &mut WignerField) -> Result<()> {
        self.advance(w, 1)
    }

    /// `n` Strang steps with the inner half-kinetic pairs merged.
    pub fn advance(&mut self, w: &mut WignerField, n: usize) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        self.check_grid(w)?;
        let t0 = w.time();
        for (b, v) in self.buf.iter_mut().zip(w.values()) {
            *b = Complex64::new(*v, 0.0);
        }
        self.kinetic(true);
        for s in 0..n {
            let t = t0 + s as f64 * self.dt;
            self.chord_ops(t)?;
            // Interior boundaries merge two half steps into one full step.
            self.kinetic(s + 1 == n);
        }
        for (v, b) in w.values_mut().iter_mut().zip(&self.buf) {
            *v = b.re;
        }
        w.set_time(t0 + n as f64 * self.dt);
        Ok(())
    }

    fn check_grid(&self, w: &WignerField) -> Result<()> {
        if !w.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch("field grid differs from the propagator grid".into()));
        }
        Ok(())
    }

    fn kinetic(&mut self, half: bool) {
        let (nx, np) = (self.grid.nx(), self.grid.np());
        transpose(&self.buf, &mut self.tbuf, nx, np);
        self.fft.x_lane.forward(&mut self.tbuf);
        let k = if half { &self.kin_half } else { &self.kin_full };
        self.tbuf.iter_mut().zip(k).for_each(|(b, f)| *b *= f);
        self.fft.x_lane.inverse(&mut self.tbuf);
        transpose(&self.tbuf, &mut self.buf, np, nx);
    }

    fn drive_factor(&self, t: f64, frac: f64) -> Option<Vec<Complex64>> {
        if !self.potential.is_driven() {
            return None;
        }
        let dt = self.dt;
        let f = if frac == 1.0 {
            0.5 * (self.potential.drive(t + 0.25 * dt) + self.potential.drive(t + 0.75 * dt))
        } else {
            self.potential.drive(t)
        };
        Some(self.ys.iter().map(|y| Complex64::from_polar(1.0, -f * y * frac * dt / self.hbar)).collect())
    }

    fn chord_ops(&mut self, t: f64) -> Result<()> {
        let np = self.grid.np();
        if self.friction.is_none() {
            self.fft.p_lane.inverse(&mut self.buf);
            let drive = self.drive_factor(t, 1.0);
            apply_rows(&mut self.buf, &self.chord_static, drive.as_deref(), np);
            self.fft.p_lane.forward(&mut self.buf);
            return Ok(());
        }
        let dt = self.dt;
        self.fft.p_lane.inverse(&mut self.buf);
        let drive = self.drive_factor(t + 0.25 * dt, 0.5);
        apply_rows(&mut self.buf, &self.chord_static, drive.as_deref(), np);
        self.fft.p_lane.forward(&mut self.buf);

        self.apply_friction()?;

        self.fft.p_lane.inverse(&mut self.buf);
        let fr = self.friction.as_ref().expect("friction present");
        for row in self.buf.chunks_mut(np) {
            row.iter_mut().zip(&fr.ou).for_each(|(b, f)| *b *= f);
        }
        let drive = self.drive_factor(t + 0.75 * dt, 0.5);
        apply_rows(&mut self.buf, &self.chord_static, drive.as_deref(), np);
        self.fft.p_lane.forward(&mut self.buf);
        Ok(())
    }

    fn apply_friction(&mut self) -> Result<()> {
        let (nx, np) = (self.grid.nx(), self.grid.np());
        let fr = self.friction.as_ref().expect("friction present");
        let w = DMatrix::from_fn(nx, np, |i, j| self.buf[i * np + j].re);
        let edge = edge_fraction(&w);
        if edge > FRICTION_EDGE_TOLERANCE {
            return Err(Error::FrictionSupport { edge });
        }
        let out = w * fr.map.transpose();
        for i in 0..nx {
            for j in 0..np {
                self.buf[i * np + j] = Complex64::new(out[(i, j)], 0.0);
            }
        }
        Ok(())
    }
}

const FRICTION_EDGE_TOLERANCE: f64 = 1e-8;

fn edge_fraction(w: &DMatrix<f64>) -> f64 {
    let peak = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let np = w.ncols();
    let edge = (0..w.nrows()).fold(0.0f64, |m, i| m.max(w[(i, 0)].abs()).max(w[(i, np - 1)].abs()));
    if peak > 0.0 {
        edge / peak
    } else {
        0.0
    }
}

fn apply_rows(buf: &mut [Complex64], kernel: &[Complex64], drive: Option<&[Complex64]>, np: usize) {
    match drive {
        None => buf.iter_mut().zip(kernel).for_each(|(b, k)| *b *= k),
        Some(d) => {
            for (row, krow) in buf.chunks_mut(np).zip(kernel.chunks(np)) {
                for ((b, k), f) in row.iter_mut().zip(krow).zip(d) {
                    *b *= k * f;
                }
            }
        }
    }
}

/// Band-limited resampling matrix for `W'(p) = s W(s p)` on the periodic
/// momentum axis (even-length trigonometric interpolation).
fn friction_map(grid: &PhaseSpaceGrid, s: f64) -> DMatrix<f64> {
    let np = grid.np();
    let h = grid.dp();
    let n = np as f64;
    let kernel = |u: f64| {
        let a = PI * u / h;
        if a.abs() < 1e-12 {
            1.0
        } else {
            let t = (a / n).tan();
            if t.abs() < 1e-300 {
                1.0
            } else {
                a.sin() / (n * t)
            }
        }
    };
    DMatrix::from_fn(np, np, |j, l| s * kernel(s * grid.p(j) - grid.p(l)))
}

/// Exact free streaming `W(x, p) -> W(x - p dt / m, p)`.
pub fn kinetic_step(w: &WignerField, dt: f64, mass: f64) -> Result<WignerField> {
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter(format!("mass {mass} must be positive")));
    }
    let g = *w.grid();
    let (nx, np) = (g.nx(), g.np());
    let mut s = Spectral::new(nx, np);
    let buf: Vec<Complex64> = w.values().iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let mut t = vec![Complex64::default(); buf.len()];
    transpose(&buf, &mut t, nx, np);
    s.x_lane.forward(&mut t);
    for j in 0..np {
        let p = g.p(j);
        for q in 0..nx {
            t[j * nx + q] *= Complex64::from_polar(1.0 / nx as f64, -g.k(q) * p * dt / mass);
        }
    }
    s.x_lane.inverse(&mut t);
    let mut out = vec![Complex64::default(); buf.len()];
    transpose(&t, &mut out, np, nx);
    let values = out.iter().map(|c| c.re).collect();
    Ok(WignerField::new(g, values, w.time() + dt)?)
}

/// Multiply the chord function by `kernel(x, y)` and transform back.
fn chord_multiply(w: &WignerField, kernel: impl Fn(f64, f64) -> Complex64) -> WignerField {
    let g = *w.grid();
    let (nx, np) = (g.nx(), g.np());
    let mut s = Spectral::new(nx, np);
    let mut buf: Vec<Complex64> = w.values().iter().map(|v| Complex64::new(*v, 0.0)).collect();
    s.p_lane.inverse(&mut buf);
    for i in 0..nx {
        let x = g.x(i);
        for q in 0..np {
            buf[i * np + q] *= kernel(x, g.y(q)) / np as f64;
        }
    }
    s.p_lane.forward(&mut buf);
    let values = buf.iter().map(|c| c.re).collect();
    WignerField::new(g, values, w.time()).expect("same grid")
}

/// Potential kick of length dt at time t in the given bracket mode.
pub fn potential_step(w: &WignerField, spec: &PotentialSpec, dt: f64, mode: BracketMode, t: f64) -> Result<WignerField> {
    spec.validate()?;
    mode.validate()?;
    let g = *w.grid();
    let [a, b] = g.x_extent();
    let grad = spec.max_gradient(a, b);
    let limit = if grad > 0.0 { PI * g.hbar() / (g.dy() * grad) } else { f64::INFINITY };
    if dt.abs() > limit {
        return Err(Error::TimestepTooLarge { dt, limit, which: "potential kernel" });
    }
    let hbar = g.hbar();
    let order = mode.max_order();
    let f = spec.drive(t);
    Ok(chord_multiply(w, |x, y| {
        let dv = spec.static_odd_difference(x, y, order) + f * y;
        Complex64::from_polar(1.0, -dv * dt / hbar)
    }))
}

/// Chord attenuation `exp(-D y^2 dt / hbar^2)` of pure momentum diffusion.
pub fn diffusion_attenuation(diffusion: f64, hbar: f64, y: f64, dt: f64) -> f64 {
    (-diffusion * y * y * dt / (hbar * hbar)).exp()
}

/// Exact solution of `dW/dt = D d^2W/dp^2` over dt.
pub fn diffusion_step(w: &WignerField, env: &EnvironmentParams, dt: f64) -> WignerField {
    let d = env.diffusion();
    let hbar = w.grid().hbar();
    let mut out = chord_multiply(w, |_, y| Complex64::new(diffusion_attenuation(d, hbar, y, dt), 0.0));
    out.set_time(w.time() + dt);
    out
}

/// `W(x, p) -> s W(x, s p)` with `s = exp(2 gamma dt)`.
pub fn friction_step(w: &WignerField, env: &EnvironmentParams, dt: f64) -> Result<WignerField> {
    let g = *w.grid();
    let gamma = env.gamma();
    if gamma == 0.0 || dt == 0.0 {
        return Ok(w.clone().with_time(w.time() + dt));
    }
    let (nx, np) = (g.nx(), g.np());
    let m = DMatrix::from_row_slice(nx, np, w.values());
    let edge = edge_fraction(&m);
    if edge > FRICTION_EDGE_TOLERANCE {
        return Err(Error::FrictionSupport { edge });
    }
    let out = m * friction_map(&g, (2.0 * gamma * dt).exp()).transpose();
    let mut values = Vec::with_capacity(nx * np);
    for i in 0..nx {
        for j in 0..np {
            values.push(out[(i, j)]);
        }
    }
    WignerField::new(g, values, w.time() + dt)
}

/// Settings for a propagation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    pub bracket_mode: BracketMode,
    pub friction_enabled: bool,
    /// Steps between snapshots; 0 disables them.
    pub snapshot_stride: usize,
    /// Steps between diagnostic samples.
    pub diagnostics_stride: usize,
}

impl EvolutionConfig {
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_max = {} must be >= 0", self.t_max)));
        }
        if self.diagnostics_stride == 0 {
            return Err(Error::InvalidParameter("diagnostics_stride must be >= 1".into()));
        }
        self.bracket_mode.validate()
    }
}

/// One Strang step (half kinetic, half potential, diffusion and friction,
/// half potential, half kinetic).
pub fn step(
    w: &WignerField,
    spec: &PotentialSpec,
    env: &EnvironmentParams,
    config: &EvolutionConfig,
) -> Result<WignerField> {
    config.validate()?;
    let mut p = Propagator::new(w.grid(), spec, env, config.bracket_mode, config.dt, config.friction_enabled)?;
    let mut out = w.clone();
    p.step(&mut out)?;
    Ok(out)
}
