//! Files written into a run directory.
//!
//! Every artifact carries the code version and an echo of the expanded
//! config: JSON files as fields, the CSV as `#` comment lines. Column
//! meanings are documented in `schema/entropy_csv.md`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qchaos_core::{ChaosVerdict, LyapunovSpectrum, PhaseSpaceGrid, TimescaleReport};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{LyapunovMethod, RunConfig};
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const ENTROPY_CSV: &str = "entropy.csv";
pub const VERDICT: &str = "verdict.json";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const MARGINALS_CSV: &str = "marginals_final.csv";

pub fn code_version() -> String {
    format!("qchaos-cli {} (qchaos-core {})", env!("CARGO_PKG_VERSION"), qchaos_core::VERSION)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub nx: usize,
    pub np: usize,
    pub x_extent: [f64; 2],
    pub p_extent: [f64; 2],
    pub hbar: f64,
    pub matched: bool,
}

impl From<&PhaseSpaceGrid> for GridSummary {
    fn from(g: &PhaseSpaceGrid) -> Self {
        Self { nx: g.nx(), np: g.np(), x_extent: g.x_extent(), p_extent: g.p_extent(), hbar: g.hbar(), matched: g.is_matched() }
    }
}

/// The exponents used by the classifier, without the convergence history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSummary {
    pub method: LyapunovMethod,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Absent for exponents given by hand.
    pub averaging_time: Option<f64>,
    pub final_quarter_spread: f64,
    pub converged: bool,
}

impl LyapunovSummary {
    pub fn new(method: LyapunovMethod, s: &LyapunovSpectrum) -> Self {
        Self {
            method,
            lambda_plus: s.lambda_plus(),
            lambda_minus: s.lambda_minus(),
            averaging_time: s.averaging_time.is_finite().then_some(s.averaging_time),
            final_quarter_spread: s.final_quarter_spread,
            converged: s.converged,
        }
    }

    pub fn spectrum(&self) -> LyapunovSpectrum {
        LyapunovSpectrum::known(self.lambda_plus, self.lambda_minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub config: RunConfig,
    pub grid: GridSummary,
    pub dt: f64,
    pub steps: usize,
    pub lyapunov: LyapunovSummary,
    pub status: RunStatus,
    pub error: Option<String>,
    pub artifacts: Vec<String>,
}

/// One diagnostic sample. Entropy columns are empty when the density
/// matrix was not diagonalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub t: f64,
    pub step: usize,
    pub norm: f64,
    pub purity: f64,
    pub linear_entropy: f64,
    pub von_neumann: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub rate: Option<f64>,
    pub rate_one_sided: Option<bool>,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub cov_xp: f64,
    pub var_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub code_version: String,
    pub config: RunConfig,
    pub entropy_series: String,
    pub smoothing_window: f64,
    pub lyapunov: LyapunovSummary,
    pub verdict: Option<ChaosVerdict>,
    pub classify_error: Option<String>,
    pub timescales: Option<TimescaleReport>,
    pub timescale_error: Option<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let f = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(std::io::BufReader::new(f)).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

/// `#` comment lines with the code version and the config as JSON.
pub fn echo_header(out: &mut impl Write, cfg: &RunConfig) -> std::io::Result<()> {
    writeln!(out, "# {}", code_version())?;
    writeln!(out, "# config {}", serde_json::to_string(cfg).map_err(std::io::Error::other)?)
}

pub fn write_entropy_csv(path: &Path, config: &RunConfig, rows: &[EntropyRow]) -> Result<(), CliError> {
    let mut out = create(path)?;
    echo_header(&mut out, config).map_err(io_err(path))?;
    let mut wr = csv::Writer::from_writer(out);
    for r in rows {
        wr.serialize(r).map_err(|e| CliError::Core(e.into()))?;
    }
    wr.flush().map_err(io_err(path))
}

pub fn read_entropy_csv(path: &Path) -> Result<Vec<EntropyRow>, CliError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(std::io::BufReader::new(f));
    rd.deserialize().collect::<Result<Vec<EntropyRow>, _>>().map_err(|e| CliError::Core(e.into()))
}

/// Run directory for a config: its `output.directory` (or `runs/<name>`)
/// under `root` unless absolute.
pub fn run_dir(cfg: &RunConfig, root: &Path) -> PathBuf {
    let rel = cfg.output.directory.clone().unwrap_or_else(|| format!("runs/{}", cfg.name));
    let p = PathBuf::from(rel);
    if p.is_absolute() {
        p
    } else {
        root.join(p)
    }
}
