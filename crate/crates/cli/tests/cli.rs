use std::fs;
use std::path::Path;
use std::process::Command;

use qchaos_cli::artifacts::{read_entropy_csv, Manifest, RunStatus, ENTROPY_CSV, MANIFEST, VERDICT};
use qchaos_cli::config::{parse_config, preset, PotentialKind, RunConfig};
use qchaos_cli::presets::NAMES;
use qchaos_cli::runner::{execute, report};
use qchaos_cli::sweep::{sweep, Axis};
use qchaos_core::BracketMode;

/// Small harmonic run, a fraction of a second.
const SMALL: &str = r#"
name = "small"

[grid]
n = 128
x_half_width = 11.0

[state]
x0 = 1.0

[environment]
diffusion = 0.02

[evolution]
dt = 0.05
t_max = 2.0
diagnostics_stride = 4
snapshot_stride = 20

[diagnostics.lyapunov]
method = "known"
exponents = [0.0, 0.0]
"#;

/// Closed inverted oscillator whose coherences outgrow the chord range
/// before t = 1, tripping the density spectrum check.
const ESCAPING: &str = r#"
name = "escaping"

[grid]
n = 128
x_half_width = 12.0

[potential]
kind = "inverted"

[evolution]
dt = 0.05
t_max = 4.0
diagnostics_stride = 5

[diagnostics.lyapunov]
method = "known"
exponents = [1.0, -1.0]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qchaos"))
}

fn files_under(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p.display().to_string());
        }
    }
    out.sort();
    out
}

#[test]
fn empty_config_fills_defaults() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.grid.n, 256);
    assert_eq!(cfg.environment.hbar, 1.0);
    assert_eq!(cfg.evolution.bracket_mode, BracketMode::MoyalExact);
    assert_eq!(cfg.potential.kind, PotentialKind::Harmonic);
}

#[test]
fn defaults_are_echoed_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(SMALL).unwrap();
    let out = execute(&cfg, tmp.path()).unwrap();
    let m: Manifest = serde_json::from_str(&fs::read_to_string(tmp.path().join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(m.config, cfg);
    assert_eq!(m.config.environment.gamma, 0.0);
    assert_eq!(m.config.diagnostics.classifier.min_points, 8);
    assert_eq!(m.status, RunStatus::Completed);
    assert_eq!(m.steps, 40);
    assert!(out.abort.is_none());
    assert!(m.code_version.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn unknown_key_reports_its_line() {
    let err = parse_config("name = \"x\"\n[grid]\nn = 64\nresolution = 3\n").unwrap_err();
    assert_eq!(err.line, Some(4));
    assert!(err.message.contains("resolution"), "{err}");
    let err = parse_config("[grid]\nn = \"many\"\n").unwrap_err();
    assert_eq!(err.line, Some(2));
}

#[test]
fn invalid_value_is_attributed_to_field() {
    let err = parse_config("[evolution]\nt_max = 1.0\ndiagnostics_stride = 0\n").unwrap_err();
    assert_eq!(err.field, "evolution.diagnostics_stride");
    assert_eq!(err.line, Some(3));
    let err = parse_config("[environment]\nhbar = -1.0\n").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn direct_diffusion_rejected_with_friction() {
    let err = parse_config("[environment]\ngamma = 0.1\ndiffusion = 0.05\n").unwrap_err();
    assert_eq!(err.field, "environment.diffusion");
    assert_eq!(err.line, Some(3));
    assert!(err.message.contains("only allowed with gamma = 0"), "{}", err.message);
    assert!(err.message.contains("temperature"), "{}", err.message);
    assert!(parse_config("[environment]\ngamma = 0.0\ndiffusion = 0.05\n").is_ok());
}

#[test]
fn preset_expands_to_fixture() {
    let expected: RunConfig = toml::from_str(include_str!("fixtures/inverted_oscillator_expanded.toml")).unwrap();
    assert_eq!(preset("inverted_oscillator").unwrap(), expected);
    assert_eq!(parse_config("preset = \"inverted_oscillator\"\n").unwrap(), expected);
}

#[test]
fn user_tables_override_preset() {
    let cfg = parse_config("preset = \"inverted_oscillator\"\n[environment]\ndiffusion = 0.2\n").unwrap();
    assert_eq!(cfg.environment.diffusion, Some(0.2));
    assert_eq!(cfg.environment.hbar, 1.0);
    assert_eq!(cfg.grid.n, 512);
}

#[test]
fn every_preset_parses() {
    for name in NAMES {
        let cfg = preset(name).unwrap();
        assert_eq!(cfg.name, name);
        assert_eq!(cfg.preset.as_deref(), Some(name));
    }
}

#[test]
fn unknown_preset_lists_available() {
    let err = parse_config("preset = \"lorenz\"\n").unwrap_err();
    assert_eq!(err.line, Some(1));
    for name in NAMES {
        assert!(err.message.contains(name), "{}", err.message);
    }
}

#[test]
fn runs_are_bit_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = parse_config(SMALL).unwrap();
    execute(&cfg, a.path()).unwrap();
    execute(&cfg, b.path()).unwrap();
    let fa = files_under(a.path());
    let fb = files_under(b.path());
    assert_eq!(fa.len(), fb.len());
    assert!(fa.iter().any(|f| f.ends_with(".wig1")));
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{x}");
    }
}

#[test]
fn artifacts_carry_version_and_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(SMALL).unwrap();
    let out = execute(&cfg, tmp.path()).unwrap();
    let csv = fs::read_to_string(tmp.path().join(ENTROPY_CSV)).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# qchaos-cli"));
    let echo = lines.next().unwrap().strip_prefix("# config ").unwrap();
    assert_eq!(serde_json::from_str::<RunConfig>(echo).unwrap(), cfg);
    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join(VERDICT)).unwrap()).unwrap();
    assert!(verdict["code_version"].as_str().unwrap().contains("qchaos-core"));
    assert_eq!(serde_json::from_value::<RunConfig>(verdict["config"].clone()).unwrap(), cfg);

    let rows = read_entropy_csv(&tmp.path().join(ENTROPY_CSV)).unwrap();
    assert_eq!(rows, out.rows);
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.von_neumann.unwrap() >= r.linear_entropy - 1e-12));
}

#[test]
fn report_reproduces_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(SMALL).unwrap();
    // Long enough for the classifier to reach a verdict.
    cfg.evolution.t_max = 12.0;
    cfg.evolution.diagnostics_stride = 2;
    cfg.diagnostics.classifier.dynamical_time = Some(1.0);
    cfg.environment.diffusion = Some(0.2);
    let out = execute(&cfg, tmp.path()).unwrap();
    assert!(out.verdict().is_some(), "{:?}", out.report.classify_error);
    let r = report(tmp.path()).unwrap();
    assert!(r.reproduced, "{}", r.summary);
    assert_eq!(r.report, out.report);
    assert!(tmp.path().join("report_rates.csv").exists());
    assert!(tmp.path().join("report_timescales.csv").exists());

    // Any edit to the stored verdict is detected.
    let path = tmp.path().join(VERDICT);
    let text = fs::read_to_string(&path).unwrap().replacen("\"smoothing_window\": 1.0", "\"smoothing_window\": 2.0", 1);
    fs::write(&path, text).unwrap();
    assert!(!report(tmp.path()).unwrap().reproduced);
}

#[test]
fn aborted_run_keeps_partial_series() {
    let tmp = tempfile::tempdir().unwrap();
    let out = execute(&parse_config(ESCAPING).unwrap(), tmp.path()).unwrap();
    assert!(out.abort.is_some());
    assert_eq!(out.exit_code(false), 3);
    assert_eq!(out.manifest.status, RunStatus::Aborted);
    let msg = out.manifest.error.as_deref().unwrap();
    assert!(msg.contains("density spectrum"), "{msg}");
    let t_last = out.rows.last().unwrap().t;
    assert!(t_last > 0.5 && t_last < 2.0, "{t_last}");
    assert!(report(tmp.path()).unwrap().reproduced);
}

#[test]
fn sweep_runs_each_value_in_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(SMALL).unwrap();
    let out = sweep(&cfg, Axis::Diffusion, &[0.01, 0.02, 0.04], 2, tmp.path()).unwrap();
    assert_eq!(out.rows.len(), 3);
    assert_eq!(out.exit_code(), 0);
    for (r, d) in out.rows.iter().zip([0.01, 0.02, 0.04]) {
        assert_eq!(r.value, d);
        assert_eq!(r.status, "completed");
        let m: Manifest = serde_json::from_str(&fs::read_to_string(Path::new(&r.run_dir).join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m.config.environment.diffusion, Some(d));
    }
    let csv = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 4);

    // Concurrency does not change results. The comment header differs only
    // in the output directory.
    let serial = tempfile::tempdir().unwrap();
    sweep(&cfg, Axis::Diffusion, &[0.01, 0.02, 0.04], 1, serial.path()).unwrap();
    for sub in ["D_00", "D_01", "D_02"] {
        let data = |root: &Path| {
            let text = fs::read_to_string(root.join(sub).join(ENTROPY_CSV)).unwrap();
            text.lines().filter(|l| !l.starts_with('#')).map(str::to_owned).collect::<Vec<_>>()
        };
        assert_eq!(data(tmp.path()), data(serial.path()));
    }
}

#[test]
fn diffusion_axis_uses_temperature_with_friction() {
    let mut cfg = RunConfig::default();
    cfg.environment.gamma = 0.5;
    cfg.environment.mass = 2.0;
    let c = Axis::Diffusion.apply(&cfg, 0.1);
    assert_eq!(c.environment.diffusion, None);
    assert!((c.environment.temperature - 0.05).abs() < 1e-15);
    assert_eq!(Axis::Hbar.apply(&cfg, 0.1).environment.hbar, 0.1);
    assert_eq!(Axis::DriveAmplitude.apply(&cfg, 0.3).potential.drive_amplitude, 0.3);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };
    let code = |args: &[&str]| bin().args(args).env("RUST_LOG", "off").output().unwrap().status.code();
    let root = tmp.path().to_str().unwrap();

    let small = write("small.toml", SMALL);
    assert_eq!(code(&["--output-root", root, "run", small.to_str().unwrap()]), Some(0));
    // Two time units are too few for any verdict.
    assert_eq!(code(&["--output-root", root, "run", small.to_str().unwrap(), "--require-verdict"]), Some(4));

    let bad = write("bad.toml", "[grid]\nn = 64\nbogus = 1\n");
    let out = bin().args(["run", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let escaping = write("escaping.toml", ESCAPING);
    assert_eq!(code(&["--output-root", root, "run", escaping.to_str().unwrap()]), Some(3));

    assert_eq!(code(&["report", tmp.path().join("runs/small").to_str().unwrap()]), Some(0));
    assert_eq!(code(&["report", tmp.path().join("missing").to_str().unwrap()]), Some(1));
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let status = bin().arg("run").arg(&cfg).env("QCHAOS_OUTPUT_ROOT", tmp.path()).env("RUST_LOG", "off").status().unwrap();
    assert!(status.success());
    assert!(tmp.path().join("runs/small").join(MANIFEST).exists());
}

#[test]
fn lyapunov_command_prints_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("inv.toml");
    fs::write(
        &cfg,
        "[potential]\nkind = \"inverted\"\nlambda = 0.5\n[state]\nx0 = 0.1\n[diagnostics.lyapunov]\nt_total = 200.0\n",
    )
    .unwrap();
    let out = bin().arg("lyapunov").arg(&cfg).env("RUST_LOG", "off").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let plus = v["exponents"][0].as_f64().unwrap();
    let minus = v["exponents"][1].as_f64().unwrap();
    assert!((plus - 0.5).abs() < 1e-2, "{plus}");
    assert!((minus + 0.5).abs() < 1e-2, "{minus}");
}
