//! The `run`, `lyapunov` and `report` subcommands.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::{info, warn};
use qchaos_core::classical::benettin_spectrum;
use qchaos_core::diagnostics::{classify, EntropyRecorder, TimescaleInputs, LAMBDA_FLOOR};
use qchaos_core::evolution::{run, Observer, Sample, SnapshotEntry};
use qchaos_core::phase_space::io::{write_marginals_csv, write_wig1};
use qchaos_core::{
    ChaosVerdict, Classification, EntropySeries, EnvironmentParams, LyapunovSpectrum, PotentialSpec, TimescaleReport,
    TrajectoryState, WignerField,
};

use crate::artifacts::{
    self, code_version, EntropyRow, GridSummary, LyapunovSummary, Manifest, RunStatus, VerdictReport, ENTROPY_CSV,
    MANIFEST, MARGINALS_CSV, SNAPSHOT_DIR, VERDICT,
};
use crate::config::{LyapunovMethod, RunConfig, StateKind};
use crate::error::{CliError, ConfigError};

/// Keeps every sample and the most recently sampled state.
#[derive(Default)]
struct SampleLog {
    samples: Vec<Sample>,
    last: Option<WignerField>,
}

impl Observer for SampleLog {
    fn on_sample(&mut self, w: &WignerField, sample: &Sample) -> qchaos_core::Result<()> {
        self.samples.push(*sample);
        self.last = Some(w.clone());
        Ok(())
    }
}

struct SnapshotWriter {
    dir: PathBuf,
}

impl SnapshotWriter {
    fn file_name(index: usize) -> String {
        format!("snap_{index:05}.wig1")
    }
}

impl Observer for SnapshotWriter {
    fn on_snapshot(&mut self, w: &WignerField, entry: &SnapshotEntry) -> qchaos_core::Result<()> {
        let out = BufWriter::new(File::create(self.dir.join(Self::file_name(entry.index)))?);
        write_wig1(w, out)
    }
}

/// Everything a finished (or aborted) run leaves behind.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub rows: Vec<EntropyRow>,
    pub series: Option<EntropySeries>,
    pub report: VerdictReport,
    /// The integrity breach that stopped the evolution early.
    pub abort: Option<qchaos_core::Error>,
}

impl RunOutcome {
    pub fn verdict(&self) -> Option<&ChaosVerdict> {
        self.report.verdict.as_ref()
    }

    /// 3 for an aborted run; 4 for a missing or inconclusive verdict when
    /// one is required.
    pub fn exit_code(&self, require_verdict: bool) -> u8 {
        if self.abort.is_some() {
            3
        } else if require_verdict
            && self.verdict().map_or(true, |v| v.classification == Classification::Inconclusive)
        {
            4
        } else {
            0
        }
    }
}

/// Lyapunov exponents for the classifier, by hand or by Benettin's method
/// from the configured initial condition (default: the state centroid).
pub fn lyapunov(cfg: &RunConfig, potential: &PotentialSpec) -> Result<LyapunovSpectrum, CliError> {
    let ly = &cfg.diagnostics.lyapunov;
    match (ly.method, ly.exponents) {
        (LyapunovMethod::Known, Some([plus, minus])) => Ok(LyapunovSpectrum::known(plus, minus)),
        (LyapunovMethod::Known, None) => Err(ConfigError {
            field: "diagnostics.lyapunov.exponents".into(),
            line: None,
            message: "method \"known\" needs exponents".into(),
        }
        .into()),
        (LyapunovMethod::Benettin, _) => {
            let start = TrajectoryState::new(ly.x0.unwrap_or(cfg.state.x0), ly.p0.unwrap_or(cfg.state.p0), 0.0);
            Ok(benettin_spectrum(&start, potential, ly.dt, ly.t_total, ly.renorm_stride)?)
        }
    }
}

/// Smoothing window the classifier will use for this config.
pub fn smoothing_window(cfg: &RunConfig, lambda_plus: f64) -> f64 {
    let fit = &cfg.diagnostics.classifier;
    let t_dyn = fit.dynamical_time.unwrap_or(if lambda_plus > LAMBDA_FLOOR { 1.0 / lambda_plus } else { 1.0 });
    fit.smoothing_window.unwrap_or(t_dyn)
}

/// Entropy series of the rows that carry a von Neumann entropy.
fn series_from_rows(rows: &[EntropyRow], smoothing: f64) -> qchaos_core::Result<EntropySeries> {
    let kept: Vec<_> = rows.iter().filter_map(|r| r.von_neumann.map(|h| (r, h))).collect();
    let mut s = EntropySeries::new(
        kept.iter().map(|(r, _)| r.t).collect(),
        kept.iter().map(|(r, _)| r.linear_entropy).collect(),
        kept.iter().map(|(_, h)| *h).collect(),
        smoothing,
    )?;
    s.min_eigenvalue = kept.iter().map(|(r, _)| r.min_eigenvalue.unwrap_or(0.0)).collect();
    Ok(s)
}

fn timescale_inputs(cfg: &RunConfig, potential: &PotentialSpec, ly: &LyapunovSummary, h_0: f64) -> TimescaleInputs {
    let spec = cfg.gaussian_spec();
    let delta_x = cfg.diagnostics.delta_x.unwrap_or(match (cfg.state.kind, cfg.state.x_sep) {
        (StateKind::Cat, Some(sep)) => sep,
        _ => spec.sigma_x,
    });
    TimescaleInputs {
        lambda_plus: ly.lambda_plus,
        lambda_minus: ly.lambda_minus,
        delta_x,
        chi: potential.nonlinearity_scale(1, spec.x0, 0.0).unwrap_or(0.0),
        delta_p: spec.sigma_p,
        h_0,
        h_eq: None,
        rate: None,
    }
}

/// Classifier verdict and timescales from stored rows. Shared by `run`
/// and `report` so the two agree bit for bit.
pub fn analyse(
    cfg: &RunConfig,
    env: &EnvironmentParams,
    potential: &PotentialSpec,
    ly: &LyapunovSummary,
    rows: &[EntropyRow],
) -> (Option<EntropySeries>, VerdictReport) {
    let smoothing = smoothing_window(cfg, ly.lambda_plus);
    let series = if cfg.diagnostics.entropy {
        series_from_rows(rows, smoothing).map_err(|e| e.to_string())
    } else {
        Err("entropy diagnostics are disabled".to_string())
    };
    let verdict = series.as_ref().map_err(Clone::clone).and_then(|s| {
        classify(s, &ly.spectrum(), &cfg.diagnostics.classifier).map_err(|e| e.to_string())
    });
    let mut inputs = timescale_inputs(cfg, potential, ly, series.as_ref().map_or(0.0, |s| s.h0));
    if let Ok(v) = &verdict {
        inputs.h_eq = Some(v.h_eq);
        inputs.rate = Some(v.plateau_rate);
    }
    let timescales = TimescaleReport::compute(env, &inputs);
    let report = VerdictReport {
        code_version: code_version(),
        config: cfg.clone(),
        entropy_series: ENTROPY_CSV.into(),
        smoothing_window: smoothing,
        lyapunov: ly.clone(),
        classify_error: verdict.as_ref().err().cloned(),
        verdict: verdict.ok(),
        timescale_error: timescales.as_ref().err().map(|e| e.to_string()),
        timescales: timescales.ok(),
    };
    (series.ok(), report)
}

fn rows_from(samples: &[Sample], entropy: Option<&EntropyRecorder>) -> Vec<EntropyRow> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let m = &s.moments;
            EntropyRow {
                t: s.t,
                step: s.step,
                norm: s.norm,
                purity: s.purity,
                linear_entropy: -s.purity.ln(),
                von_neumann: entropy.and_then(|e| e.von_neumann.get(i).copied()),
                min_eigenvalue: entropy.and_then(|e| e.min_eigenvalue.get(i).copied()),
                rate: None,
                rate_one_sided: None,
                mean_x: m.mean_x,
                mean_p: m.mean_p,
                var_x: m.var_x(),
                cov_xp: m.cov_xp(),
                var_p: m.var_p(),
            }
        })
        .collect()
}

fn fill_rates(rows: &mut [EntropyRow], series: &EntropySeries) {
    let mut rates = series.rate_estimates.iter();
    for r in rows.iter_mut().filter(|r| r.von_neumann.is_some()) {
        if let Some(rs) = rates.next() {
            r.rate = Some(rs.rate);
            r.rate_one_sided = Some(rs.one_sided);
        }
    }
}

/// Evolve `cfg` and write its artifacts into `dir`. Setup problems are
/// errors; an integrity breach during evolution still writes the partial
/// series, marked aborted.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate().map_err(|(field, message)| CliError::from(ConfigError { field, line: None, message }))?;
    let grid = cfg.build_grid()?;
    let env = cfg.build_environment().map_err(|(field, message)| CliError::from(ConfigError { field, line: None, message }))?;
    let potential = cfg.build_potential()?;
    let initial = cfg.build_state(&grid).map_err(|(field, message)| CliError::from(ConfigError { field, line: None, message }))?;
    let evolution = cfg.build_evolution(&grid, &potential);
    evolution.validate()?;

    let spectrum = lyapunov(cfg, &potential)?;
    let ly = LyapunovSummary::new(cfg.diagnostics.lyapunov.method, &spectrum);

    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let snap_dir = dir.join(SNAPSHOT_DIR);
    if snap_dir.exists() {
        std::fs::remove_dir_all(&snap_dir).map_err(|source| CliError::Io { path: snap_dir.clone(), source })?;
    }
    if evolution.snapshot_stride > 0 {
        std::fs::create_dir_all(&snap_dir).map_err(|source| CliError::Io { path: snap_dir.clone(), source })?;
    }

    info!("{}: {} steps of dt = {:.4e} on {}x{}", cfg.name, evolution.n_steps(), evolution.dt, grid.nx(), grid.np());
    let mut log = SampleLog::default();
    let mut entropy = EntropyRecorder::new();
    let mut snaps = SnapshotWriter { dir: snap_dir };
    let result = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut log];
        if cfg.diagnostics.entropy {
            observers.push(&mut entropy);
        }
        if evolution.snapshot_stride > 0 {
            observers.push(&mut snaps);
        }
        run(&initial, &potential, &env, &evolution, &mut observers)
    };
    let (abort, snapshots) = match result {
        Ok(record) => (None, record.snapshots.len()),
        Err(e @ (qchaos_core::Error::IntegrityBreach { .. } | qchaos_core::Error::NegativeSpectrum(_))) => {
            warn!("{}: aborted: {e}", cfg.name);
            let written = if evolution.snapshot_stride > 0 {
                log.samples.last().map_or(0, |s| s.step / evolution.snapshot_stride + 1)
            } else {
                0
            };
            (Some(e), written)
        }
        Err(e) => return Err(e.into()),
    };

    let mut rows = rows_from(&log.samples, cfg.diagnostics.entropy.then_some(&entropy));
    let (series, report) = analyse(cfg, &env, &potential, &ly, &rows);
    if let Some(s) = &series {
        fill_rates(&mut rows, s);
    }

    let mut written = vec![MANIFEST.to_string(), ENTROPY_CSV.to_string(), VERDICT.to_string()];
    artifacts::write_entropy_csv(&dir.join(ENTROPY_CSV), cfg, &rows)?;
    artifacts::write_json(&dir.join(VERDICT), &report)?;
    if let (true, Some(last)) = (cfg.output.marginals, &log.last) {
        let path = dir.join(MARGINALS_CSV);
        let mut out = artifacts::create(&path)?;
        artifacts::echo_header(&mut out, cfg).map_err(|source| CliError::Io { path: path.clone(), source })?;
        write_marginals_csv(last, out)?;
        written.push(MARGINALS_CSV.into());
    }
    written.extend((0..snapshots).map(|i| format!("{SNAPSHOT_DIR}/{}", SnapshotWriter::file_name(i))));
    let manifest = Manifest {
        code_version: code_version(),
        config: cfg.clone(),
        grid: GridSummary::from(&grid),
        dt: evolution.dt,
        steps: evolution.n_steps(),
        lyapunov: ly,
        status: if abort.is_some() { RunStatus::Aborted } else { RunStatus::Completed },
        error: abort.as_ref().map(|e| e.to_string()),
        artifacts: written,
    };
    artifacts::write_json(&dir.join(MANIFEST), &manifest)?;
    if let Some(v) = &report.verdict {
        info!("{}: {:?}, plateau ratio {:.3}, decay exponent {:.3}", cfg.name, v.classification, v.plateau_ratio, v.decay_exponent);
    }
    Ok(RunOutcome { dir: dir.to_path_buf(), manifest, rows, series, report, abort })
}

/// Result of re-deriving a run's verdict from its stored series.
#[derive(Debug)]
pub struct ReportOutcome {
    pub manifest: Manifest,
    pub report: VerdictReport,
    /// The recomputed `verdict.json` equals the stored one byte for byte.
    pub reproduced: bool,
    pub summary: String,
}

pub const REPORT_RATES_CSV: &str = "report_rates.csv";
pub const REPORT_TIMESCALES_CSV: &str = "report_timescales.csv";

/// Recompute verdict and timescales of a run directory without
/// re-simulating, write plot-ready CSVs next to it, and summarize.
pub fn report(dir: &Path) -> Result<ReportOutcome, CliError> {
    let manifest: Manifest = artifacts::read_json(&dir.join(MANIFEST))?;
    let rows = artifacts::read_entropy_csv(&dir.join(ENTROPY_CSV))?;
    let cfg = &manifest.config;
    let env = cfg.build_environment().map_err(|(field, message)| CliError::from(ConfigError { field, line: None, message }))?;
    let potential = cfg.build_potential()?;
    let (series, report) = analyse(cfg, &env, &potential, &manifest.lyapunov, &rows);

    let verdict_path = dir.join(VERDICT);
    let stored = std::fs::read_to_string(&verdict_path).map_err(|source| CliError::Io { path: verdict_path.clone(), source })?;
    let fresh = serde_json::to_string_pretty(&report).map_err(|source| CliError::Json { path: verdict_path, source })? + "\n";
    let reproduced = stored == fresh;

    write_rates_csv(&dir.join(REPORT_RATES_CSV), cfg, &rows, series.as_ref(), manifest.lyapunov.lambda_plus)?;
    write_timescales_csv(&dir.join(REPORT_TIMESCALES_CSV), cfg, report.timescales.as_ref())?;
    let summary = summarize(&manifest, &report, reproduced);
    Ok(ReportOutcome { manifest, report, reproduced, summary })
}

fn write_rates_csv(
    path: &Path,
    cfg: &RunConfig,
    rows: &[EntropyRow],
    series: Option<&EntropySeries>,
    lambda_plus: f64,
) -> Result<(), CliError> {
    let mut out = artifacts::create(path)?;
    artifacts::echo_header(&mut out, cfg).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut wr = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Core(e.into());
    wr.write_record(["t", "linear_entropy", "von_neumann", "rate", "lambda_plus", "var_x", "var_p"]).map_err(io)?;
    let rates = series.map(|s| s.rate_estimates.as_slice()).unwrap_or_default();
    let mut k = 0;
    for r in rows {
        let rate = match r.von_neumann {
            Some(_) => {
                k += 1;
                rates.get(k - 1).map(|s| s.rate.to_string()).unwrap_or_default()
            }
            None => String::new(),
        };
        wr.write_record([
            r.t.to_string(),
            r.linear_entropy.to_string(),
            r.von_neumann.map(|h| h.to_string()).unwrap_or_default(),
            rate,
            lambda_plus.to_string(),
            r.var_x.to_string(),
            r.var_p.to_string(),
        ])
        .map_err(io)?;
    }
    wr.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_timescales_csv(path: &Path, cfg: &RunConfig, ts: Option<&TimescaleReport>) -> Result<(), CliError> {
    let mut out = artifacts::create(path)?;
    artifacts::echo_header(&mut out, cfg).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut wr = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Core(e.into());
    wr.write_record(["quantity", "value"]).map_err(io)?;
    if let Some(ts) = ts {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let items = [
            ("tau_d", ts.tau_d.from_diffusion.to_string()),
            ("tau_d_relaxation", opt(ts.tau_d.from_relaxation)),
            ("tau_r", ts.tau_r.to_string()),
            ("t_chi", opt(ts.t_chi)),
            ("chi_1", ts.chi_1.to_string()),
            ("t_eq_ratio", opt(ts.t_eq.map(|t| t.ratio_form))),
            ("t_eq_difference", opt(ts.t_eq.map(|t| t.difference_form))),
            ("h_eq", opt(ts.h_eq)),
            ("h_0", ts.h_0.to_string()),
            ("sigma_c", opt(ts.sigma_c)),
            ("coherence_length", opt(ts.coherence_length)),
        ];
        for (k, v) in items {
            wr.write_record([k, v.as_str()]).map_err(io)?;
        }
    }
    wr.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn summarize(m: &Manifest, r: &VerdictReport, reproduced: bool) -> String {
    let mut s = String::new();
    let status = match m.status {
        RunStatus::Completed => "completed".to_string(),
        RunStatus::Aborted => format!("aborted: {}", m.error.as_deref().unwrap_or("unknown")),
    };
    s += &format!("run {} ({})\n", m.config.name, m.code_version);
    s += &format!("  grid {}x{}, dt {:.4e}, {} steps, {status}\n", m.grid.nx, m.grid.np, m.dt, m.steps);
    s += &format!("  lyapunov ({:?}): lambda+ {:.5}, lambda- {:.5}\n", m.lyapunov.method, m.lyapunov.lambda_plus, m.lyapunov.lambda_minus);
    match (&r.verdict, &r.classify_error) {
        (Some(v), _) => {
            s += &format!("  verdict: {:?}, {}\n", v.classification, v.reason);
            s += &format!(
                "  plateau rate {:.5} (ratio {:.4}), decay exponent {:.3}, window [{:.3}, {:.3}]\n",
                v.plateau_rate, v.plateau_ratio, v.decay_exponent, v.fit_window[0], v.fit_window[1]
            );
            s += &format!("  H_eq {:.4}, saturation at t = {:.3}\n", v.h_eq, v.saturation_time);
        }
        (None, Some(e)) => s += &format!("  verdict unavailable: {e}\n"),
        (None, None) => {}
    }
    if let Some(ts) = &r.timescales {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        s += &format!(
            "  tau_D {:.4e}, t_chi {}, sigma_c {}, coherence length {}\n",
            ts.tau_d.from_diffusion,
            fmt(ts.t_chi),
            fmt(ts.sigma_c),
            fmt(ts.coherence_length)
        );
    }
    s += if reproduced { "  verdict.json reproduced exactly\n" } else { "  verdict.json DIFFERS from the recomputation\n" };
    s
}
