//! `sweep`: one run per value of a parameter, run concurrently.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{error, info};
use serde::Serialize;

use crate::artifacts;
use crate::config::RunConfig;
use crate::error::{CliError, ConfigError};
use crate::runner::{execute, RunOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
pub enum Axis {
    /// Momentum diffusion constant. With gamma = 0 it is set directly,
    /// otherwise through the temperature, T = D / (2 m gamma).
    #[value(name = "D")]
    #[serde(rename = "D")]
    Diffusion,
    #[value(name = "hbar")]
    #[serde(rename = "hbar")]
    Hbar,
    #[value(name = "drive_amplitude")]
    #[serde(rename = "drive_amplitude")]
    DriveAmplitude,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Diffusion => "D",
            Axis::Hbar => "hbar",
            Axis::DriveAmplitude => "drive_amplitude",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &RunConfig, value: f64) -> RunConfig {
        let mut cfg = base.clone();
        match self {
            Axis::Diffusion if cfg.environment.gamma == 0.0 => cfg.environment.diffusion = Some(value),
            Axis::Diffusion => {
                let e = &mut cfg.environment;
                e.diffusion = None;
                e.temperature = value / (2.0 * e.mass * e.gamma);
            }
            Axis::Hbar => cfg.environment.hbar = value,
            Axis::DriveAmplitude => cfg.potential.drive_amplitude = value,
        }
        cfg
    }
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    /// `completed`, `aborted` or `failed`.
    pub status: String,
    pub classification: Option<String>,
    pub plateau_rate: Option<f64>,
    pub plateau_ratio: Option<f64>,
    pub decay_exponent: Option<f64>,
    pub t_chi: Option<f64>,
    pub run_dir: String,
    pub error: Option<String>,
}

pub const SWEEP_CSV: &str = "sweep.csv";

fn row(axis: Axis, value: f64, dir: &Path, result: &Result<RunOutcome, CliError>) -> SweepRow {
    let mut r = SweepRow {
        axis,
        value,
        status: "failed".into(),
        classification: None,
        plateau_rate: None,
        plateau_ratio: None,
        decay_exponent: None,
        t_chi: None,
        run_dir: dir.display().to_string(),
        error: None,
    };
    match result {
        Ok(o) => {
            r.status = if o.abort.is_some() { "aborted" } else { "completed" }.into();
            if let Some(v) = o.verdict() {
                r.classification = Some(format!("{:?}", v.classification).to_lowercase());
                r.plateau_rate = Some(v.plateau_rate);
                r.plateau_ratio = Some(v.plateau_ratio);
                r.decay_exponent = Some(v.decay_exponent);
            }
            r.t_chi = o.report.timescales.as_ref().and_then(|t| t.t_chi);
            r.error = o.abort.as_ref().map(|e| e.to_string()).or_else(|| o.report.classify_error.clone());
        }
        Err(e) => r.error = Some(e.to_string()),
    }
    r
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub rows: Vec<SweepRow>,
}

impl SweepOutcome {
    /// 3 if any member aborted, 1 if any failed otherwise, else 0.
    pub fn exit_code(&self) -> u8 {
        if self.rows.iter().any(|r| r.status == "aborted") {
            3
        } else if self.rows.iter().any(|r| r.status == "failed") {
            1
        } else {
            0
        }
    }
}

/// Run `base` once per value, at most `jobs` at a time, each in its own
/// subdirectory of `dir`, then write `sweep.csv` there.
pub fn sweep(base: &RunConfig, axis: Axis, values: &[f64], jobs: usize, dir: &Path) -> Result<SweepOutcome, CliError> {
    if values.is_empty() {
        return Err(ConfigError { field: "--values".into(), line: None, message: "no sweep values given".into() }.into());
    }
    let members: Vec<(f64, RunConfig, PathBuf)> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut cfg = axis.apply(base, v);
            cfg.name = format!("{}_{}_{i:02}", base.name, axis.name());
            let sub = dir.join(format!("{}_{i:02}", axis.name()));
            cfg.output.directory = Some(sub.display().to_string());
            (v, cfg, sub)
        })
        .collect();
    // Reject the whole sweep before running anything.
    for (v, cfg, _) in &members {
        cfg.validate().map_err(|(field, message)| {
            CliError::from(ConfigError { field, line: None, message: format!("{} = {v}: {message}", axis.name()) })
        })?;
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; members.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, members.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((v, cfg, sub)) = members.get(i) else { break };
                info!("sweep member {i}: {} = {v}", axis.name());
                let result = execute(cfg, sub);
                if let Err(e) = &result {
                    error!("sweep member {i} failed: {e}");
                }
                results.lock().expect("sweep result lock")[i] = Some(row(axis, *v, sub, &result));
            });
        }
    });
    let rows: Vec<SweepRow> = results.into_inner().expect("sweep result lock").into_iter().flatten().collect();

    let path = dir.join(SWEEP_CSV);
    let mut out = artifacts::create(&path)?;
    artifacts::echo_header(&mut out, base).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let mut wr = csv::Writer::from_writer(out);
    for r in &rows {
        wr.serialize(r).map_err(|e| CliError::Core(e.into()))?;
    }
    wr.flush().map_err(|source| CliError::Io { path, source })?;
    Ok(SweepOutcome { dir: dir.to_path_buf(), rows })
}
