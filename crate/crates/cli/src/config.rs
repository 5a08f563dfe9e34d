//! TOML run configuration.
//!
//! A config may name a `preset`; its own tables are deep-merged over the
//! preset before defaults are filled in. Unknown keys are rejected with
//! the line they appear on.

use qchaos_core::phase_space::{make_cat, make_gaussian};
use qchaos_core::{BracketMode, EnvironmentParams, FitConfig, GaussianSpec, PhaseSpaceGrid, PotentialSpec, WignerField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, ConfigError};
use crate::presets;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Preset the file was layered on, if any.
    pub preset: Option<String>,
    pub name: String,
    pub grid: GridConfig,
    pub state: StateConfig,
    pub potential: PotentialConfig,
    pub environment: EnvironmentConfig,
    pub evolution: EvolutionBlock,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            name: "run".into(),
            grid: GridConfig::default(),
            state: StateConfig::default(),
            potential: PotentialConfig::default(),
            environment: EnvironmentConfig::default(),
            evolution: EvolutionBlock::default(),
            diagnostics: DiagnosticsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Square grid centred on the origin. Without `p_half_width` the momentum
/// extent is matched to the position extent so density transforms apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub x_half_width: f64,
    pub p_half_width: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 256, x_half_width: 12.0, p_half_width: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Gaussian,
    Cat,
}

/// Missing widths default to a minimum-uncertainty state; with neither
/// given, `sigma_x = sqrt(hbar / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    pub kind: StateKind,
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: Option<f64>,
    pub sigma_p: Option<f64>,
    /// Off-diagonal covariance `<x p>`.
    pub xp_covariance: f64,
    /// Lobe separation for cat states.
    pub x_sep: Option<f64>,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self { kind: StateKind::Gaussian, x0: 0.0, p0: 0.0, sigma_x: None, sigma_p: None, xp_covariance: 0.0, x_sep: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Harmonic,
    Inverted,
    DoubleWellDriven,
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    /// Stretching rate of the inverted oscillator.
    pub lambda: f64,
    /// Static coefficients `c_k` of `sum c_k x^k`, for `polynomial`.
    pub coefficients: Option<Vec<f64>>,
    pub drive_amplitude: f64,
    pub drive_frequency: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self { kind: PotentialKind::Harmonic, lambda: 1.0, coefficients: None, drive_amplitude: 0.0, drive_frequency: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub gamma: f64,
    pub temperature: f64,
    pub mass: f64,
    pub hbar: f64,
    /// Direct momentum diffusion constant; only valid with `gamma = 0`.
    pub diffusion: Option<f64>,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self { gamma: 0.0, temperature: 1.0, mass: 1.0, hbar: 1.0, diffusion: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionBlock {
    /// Defaults to a quarter of the stability limit.
    pub dt: Option<f64>,
    pub t_max: f64,
    pub bracket_mode: BracketMode,
    pub friction: bool,
    /// Steps between snapshots; 0 disables them.
    pub snapshot_stride: usize,
    /// Steps between diagnostic samples.
    pub diagnostics_stride: usize,
}

impl Default for EvolutionBlock {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 10.0,
            bracket_mode: BracketMode::MoyalExact,
            friction: false,
            snapshot_stride: 0,
            diagnostics_stride: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMethod {
    Benettin,
    Known,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovConfig {
    pub method: LyapunovMethod,
    /// `[lambda_plus, lambda_minus]` for `known`.
    pub exponents: Option<[f64; 2]>,
    /// Initial condition; defaults to the state centroid.
    pub x0: Option<f64>,
    pub p0: Option<f64>,
    pub dt: f64,
    pub t_total: f64,
    pub renorm_stride: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self { method: LyapunovMethod::Benettin, exponents: None, x0: None, p0: None, dt: 0.005, t_total: 2.0e4, renorm_stride: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Diagonalize the density matrix at every sample.
    pub entropy: bool,
    /// Separation used for the decoherence time; defaults to the cat
    /// separation or the initial position width.
    pub delta_x: Option<f64>,
    pub classifier: FitConfig,
    pub lyapunov: LyapunovConfig,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { entropy: true, delta_x: None, classifier: FitConfig::default(), lyapunov: LyapunovConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Run directory, relative to the output root unless absolute.
    /// Defaults to `runs/<name>`.
    pub directory: Option<String>,
    pub snapshots: bool,
    /// Write x and p marginals of the final state.
    pub marginals: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, snapshots: true, marginals: true }
    }
}

/// Parse a config, expanding its preset, and validate every block.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let user: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::from_toml(&e, text, None))?;
    // Key and type errors are reported against the user's own text.
    let _: RunConfig = toml::from_str(text).map_err(|e| ConfigError::from_toml(&e, text, None))?;

    let merged = match user.get("preset") {
        Some(toml::Value::String(name)) => {
            let base_text = presets::text(name).ok_or_else(|| ConfigError {
                field: "preset".into(),
                line: locate(text, "", "preset"),
                message: format!("unknown preset {name:?}; available: {}", presets::NAMES.join(", ")),
            })?;
            let mut base: toml::Table =
                base_text.parse().map_err(|e: toml::de::Error| ConfigError::from_toml(&e, base_text, Some(name)))?;
            merge(&mut base, user);
            base
        }
        _ => user,
    };
    let cfg: RunConfig = toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError { field: String::new(), line: None, message: e.message().to_string() })?;
    cfg.validate().map_err(|(field, message)| {
        let (table, key) = field.rsplit_once('.').unwrap_or(("", field.as_str()));
        ConfigError { line: locate(text, table, key), field: field.clone(), message }
    })?;
    Ok(cfg)
}

/// Load a preset by name, with defaults filled in.
pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    parse_config(&format!("preset = {name:?}\n"))
}

/// Recursively overlay `top` onto `base`; tables merge, other values replace.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// 1-based line of `key` inside `[table]` (empty for the root), if the
/// text sets it there.
pub(crate) fn locate(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            let k = k.trim();
            if current == table && k == key {
                return Some(i + 1);
            }
            // Dotted keys at the root, e.g. `environment.hbar = 1`.
            if current.is_empty() && !table.is_empty() && k == format!("{table}.{key}") {
                return Some(i + 1);
            }
        }
    }
    None
}

type Invalid = (String, String);

fn invalid(field: &str, message: impl Into<String>) -> Invalid {
    (field.to_string(), message.into())
}

impl RunConfig {
    /// Check every block by building the objects it describes.
    pub fn validate(&self) -> Result<(), Invalid> {
        self.build_environment()?;
        let g = self.build_grid().map_err(|e| invalid("grid.n", e.to_string()))?;
        self.build_potential().map_err(|e| invalid("potential.kind", e.to_string()))?;
        self.build_state(&g)?;
        let ev = &self.evolution;
        if let Some(dt) = ev.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(invalid("evolution.dt", format!("dt = {dt} must be positive")));
            }
        }
        if !(ev.t_max.is_finite() && ev.t_max >= 0.0) {
            return Err(invalid("evolution.t_max", format!("t_max = {} must be finite and >= 0", ev.t_max)));
        }
        if ev.diagnostics_stride == 0 {
            return Err(invalid("evolution.diagnostics_stride", "must be at least 1"));
        }
        ev.bracket_mode.validate().map_err(|e| invalid("evolution.bracket_mode", e.to_string()))?;
        if ev.friction && self.environment.gamma == 0.0 {
            return Err(invalid("evolution.friction", "friction needs gamma > 0"));
        }
        let ly = &self.diagnostics.lyapunov;
        match ly.method {
            LyapunovMethod::Known if ly.exponents.is_none() => {
                return Err(invalid("diagnostics.lyapunov.exponents", "method \"known\" needs exponents = [plus, minus]"));
            }
            LyapunovMethod::Benettin if !(ly.dt > 0.0 && ly.t_total > 0.0 && ly.renorm_stride > 0) => {
                return Err(invalid("diagnostics.lyapunov.dt", "dt, t_total and renorm_stride must be positive"));
            }
            _ => {}
        }
        if let Some(dx) = self.diagnostics.delta_x {
            if !(dx.is_finite() && dx > 0.0) {
                return Err(invalid("diagnostics.delta_x", format!("delta_x = {dx} must be positive")));
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> qchaos_core::Result<PhaseSpaceGrid> {
        let g = &self.grid;
        let hbar = self.environment.hbar;
        match g.p_half_width {
            None => PhaseSpaceGrid::matched(g.n, g.x_half_width, hbar),
            Some(ph) => PhaseSpaceGrid::new(g.n, g.n, [-g.x_half_width, g.x_half_width], [-ph, ph], hbar),
        }
    }

    pub fn build_environment(&self) -> Result<EnvironmentParams, Invalid> {
        let e = &self.environment;
        let env = EnvironmentParams::new(e.gamma, e.temperature, e.mass, e.hbar).map_err(|err| {
            let field = if !(e.gamma >= 0.0) {
                "environment.gamma"
            } else if !(e.temperature > 0.0) {
                "environment.temperature"
            } else if !(e.mass > 0.0) {
                "environment.mass"
            } else {
                "environment.hbar"
            };
            invalid(field, err.to_string())
        })?;
        match e.diffusion {
            Some(_) if e.gamma > 0.0 => Err(invalid(
                "environment.diffusion",
                format!(
                    "a direct diffusion constant is only allowed with gamma = 0 (the reversible classical limit); \
                     with gamma = {} set temperature instead, D = 2 m gamma T",
                    e.gamma
                ),
            )),
            Some(d) => env.with_diffusion(d).map_err(|err| invalid("environment.diffusion", err.to_string())),
            None => Ok(env),
        }
    }

    pub fn build_potential(&self) -> qchaos_core::Result<PotentialSpec> {
        let p = &self.potential;
        let m = self.environment.mass;
        let coefficients = match p.kind {
            PotentialKind::Harmonic => vec![0.0, 0.0, 0.5],
            PotentialKind::Inverted => vec![0.0, 0.0, -0.5 * p.lambda * p.lambda],
            PotentialKind::DoubleWellDriven => vec![0.0, 0.0, -0.5, 0.0, 0.25],
            PotentialKind::Polynomial => p.coefficients.clone().ok_or_else(|| {
                qchaos_core::Error::InvalidParameter("polynomial potential needs coefficients = [c0, c1, ...]".into())
            })?,
        };
        PotentialSpec::new(coefficients, p.drive_amplitude, p.drive_frequency, m)
    }

    /// Widths of the (base) Gaussian after filling defaults.
    pub fn gaussian_spec(&self) -> GaussianSpec {
        let s = &self.state;
        let hbar = self.environment.hbar;
        let (sx, sp) = match (s.sigma_x, s.sigma_p) {
            (Some(x), Some(p)) => (x, p),
            (Some(x), None) => (x, hbar / (2.0 * x)),
            (None, Some(p)) => (hbar / (2.0 * p), p),
            (None, None) => {
                let x = (0.5 * hbar).sqrt();
                (x, hbar / (2.0 * x))
            }
        };
        GaussianSpec { x0: s.x0, p0: s.p0, sigma_x: sx, sigma_p: sp, xp_correlation: s.xp_covariance }
    }

    pub fn build_state(&self, grid: &PhaseSpaceGrid) -> Result<WignerField, Invalid> {
        let spec = self.gaussian_spec();
        match (self.state.kind, self.state.x_sep) {
            (StateKind::Gaussian, Some(_)) => Err(invalid("state.x_sep", "x_sep only applies to kind = \"cat\"")),
            (StateKind::Gaussian, None) => make_gaussian(&spec, grid).map_err(|e| invalid("state.sigma_x", e.to_string())),
            (StateKind::Cat, None) => Err(invalid("state.x_sep", "cat states need x_sep")),
            (StateKind::Cat, Some(sep)) => make_cat(sep, &spec, grid).map_err(|e| invalid("state.x_sep", e.to_string())),
        }
    }

    pub fn build_evolution(&self, grid: &PhaseSpaceGrid, potential: &PotentialSpec) -> qchaos_core::EvolutionConfig {
        let ev = &self.evolution;
        qchaos_core::EvolutionConfig {
            dt: ev.dt.unwrap_or_else(|| qchaos_core::evolution::default_dt(grid, potential)),
            t_max: ev.t_max,
            bracket_mode: ev.bracket_mode,
            friction_enabled: ev.friction,
            snapshot_stride: if self.output.snapshots { ev.snapshot_stride } else { 0 },
            diagnostics_stride: ev.diagnostics_stride,
        }
    }
}

/// Read and parse a config file.
pub fn load(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text).map_err(|e| CliError::Config(e.with_source(path.display().to_string())))
}
