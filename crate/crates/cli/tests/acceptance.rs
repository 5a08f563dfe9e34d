//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! `ACCEPTANCE_ONLY=1,5,9` restricts the run to the listed criteria.

use std::path::PathBuf;
use std::time::Instant;

use qchaos_cli::artifacts::EntropyRow;
use qchaos_cli::config::preset;
use qchaos_cli::runner::{execute, RunOutcome};
use qchaos_cli::sweep::{sweep, Axis};
use qchaos_core::classical::{benettin_spectrum, ensemble_spread, sample_gaussian_cloud, EnsembleMoments};
use qchaos_core::diagnostics::{hdot_model, Classification};
use qchaos_core::evolution::{diffusion_step, run, Observer, Sample};
use qchaos_core::phase_space::{density_to_wigner, make_cat, make_gaussian, wigner_to_density};
use qchaos_core::{
    BracketMode, EnvironmentParams, EvolutionConfig, GaussianSpec, PhaseSpaceGrid, PotentialSpec, Propagator,
    TrajectoryState, WignerField,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Verdict {
    verdict(false, detail)
}

/// Results shared between criteria.
#[derive(Default)]
struct Shared {
    lambda_plus: Option<f64>,
    inverted: Option<RunOutcome>,
    harmonic: Option<RunOutcome>,
    double_well: Vec<RunOutcome>,
}

impl Shared {
    /// Benettin lambda+ of the driven double-well preset.
    fn lambda_plus(&mut self) -> f64 {
        *self.lambda_plus.get_or_insert_with(|| {
            let cfg = preset("double_well_driven").expect("preset");
            let v = cfg.build_potential().expect("potential");
            qchaos_cli::runner::lyapunov(&cfg, &v).expect("benettin").lambda_plus()
        })
    }

    fn inverted(&mut self) -> &RunOutcome {
        self.inverted.get_or_insert_with(|| run_preset("inverted_oscillator"))
    }
}

fn scratch_root() -> PathBuf {
    std::env::temp_dir().join(format!("qchaos-acceptance-{}", std::process::id()))
}

fn scratch(name: &str) -> PathBuf {
    let dir = scratch_root().join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run_preset(name: &str) -> RunOutcome {
    let cfg = preset(name).expect("preset");
    execute(&cfg, &scratch(name)).expect("run")
}

fn abort_note(o: &RunOutcome) -> String {
    match &o.abort {
        Some(e) => format!("run aborted: {e}"),
        None => "run completed".into(),
    }
}

// 1. Pure momentum diffusion multiplies every chord sample by
//    exp(-y^2 D t / hbar^2).
fn c1() -> Verdict {
    let hbar = 1.0;
    let g = PhaseSpaceGrid::matched(256, 20.0, hbar).expect("grid");
    let (sx, sp) = (5.0, 0.1);
    let w = WignerField::from_fn(g, 0.0, |x, p| (-x * x / (2.0 * sx * sx) - p * p / (2.0 * sp * sp)).exp());
    let (d, t) = (0.02, 0.5);
    let env = EnvironmentParams::closed(1.0, hbar).expect("env").with_diffusion(d).expect("diffusion");
    let start = Instant::now();
    let out = diffusion_step(&w, &env, t);
    let elapsed = start.elapsed().as_secs_f64();
    let (before, after) = (w.chord(), out.chord());
    let mut worst = 0.0f64;
    for i in 0..g.nx() {
        for q in 0..g.np() {
            let k = i * g.np() + q;
            let y = g.y(q);
            let expected = (-(y * y) * d * t / (hbar * hbar)).exp();
            let measured = after[k] / before[k];
            worst = worst.max((measured.re - expected).abs().max(measured.im.abs()) / expected);
        }
    }
    verdict(
        worst <= 1e-10 && elapsed < 1.0,
        format!("max relative chord error {worst:.2e} (tol 1e-10), {elapsed:.3} s at 256^2 (limit 1 s)"),
    )
}

fn rows_in(rows: &[EntropyRow], t0: f64, t1: f64) -> impl Iterator<Item = &EntropyRow> {
    rows.iter().filter(move |r| r.t >= t0 - 1e-9 && r.t <= t1 + 1e-9)
}

fn covers(rows: &[EntropyRow], t1: f64) -> bool {
    rows.last().is_some_and(|r| r.t >= t1 - 1e-9)
}

// 2. Inverted oscillator transient rate and plateau.
fn c2(s: &mut Shared) -> Verdict {
    let cfg = preset("inverted_oscillator").expect("preset");
    let lambda = cfg.potential.lambda;
    let d = cfg.environment.diffusion.expect("preset sets D");
    let sigma_c = (2.0 * d / lambda).sqrt();
    // sigma_c is a 1/e half-width; the state's momentum spread is a
    // standard deviation.
    let sigma_p0 = cfg.state.sigma_p.expect("preset sets sigma_p") * 2f64.sqrt();
    let o = s.inverted();
    if !covers(&o.rows, 8.0) {
        let t_last = o.rows.last().map_or(0.0, |r| r.t);
        return fail(format!("no entropy rate beyond t = {t_last:.2}; {}", abort_note(o)));
    }
    let mut worst = 0.0f64;
    for r in rows_in(&o.rows, 1.0, 8.0) {
        let Some(rate) = r.rate else { return fail(format!("missing rate at t = {}", r.t)) };
        let model = hdot_model(lambda, sigma_p0, sigma_c, r.t);
        worst = worst.max((rate - model).abs() / model);
    }
    let mut plateau = 0.0f64;
    for r in rows_in(&o.rows, 4.0, 8.0) {
        plateau = plateau.max((r.rate.unwrap_or(f64::NAN) - lambda).abs() / lambda);
    }
    verdict(
        worst <= 0.05 && plateau <= 0.02,
        format!("rate vs transient model max rel dev {worst:.3} (tol 0.05) on [1, 8]; plateau dev {plateau:.3} (tol 0.02)"),
    )
}

// 3. Conditional momentum spread settles on the critical dispersion.
fn c3(s: &mut Shared) -> Verdict {
    let cfg = preset("inverted_oscillator").expect("preset");
    let d = cfg.environment.diffusion.expect("preset sets D");
    let sigma_c = (2.0 * d / cfg.potential.lambda).sqrt();
    let o = s.inverted();
    if !covers(&o.rows, 8.0) {
        let t_last = o.rows.last().map_or(0.0, |r| r.t);
        return fail(format!("state lost before the steady regime (last sample t = {t_last:.2}); {}", abort_note(o)));
    }
    let mut worst = 0.0f64;
    for r in rows_in(&o.rows, 4.0, 8.0) {
        let conditional = (r.var_x * r.var_p - r.cov_xp * r.cov_xp) / r.var_x;
        let half_width = (2.0 * conditional).sqrt();
        worst = worst.max((half_width - sigma_c).abs() / sigma_c);
    }
    verdict(worst <= 0.03, format!("contracting half-width vs sqrt(2D/lambda) = {sigma_c:.4}: max rel dev {worst:.4} (tol 0.03)"))
}

// 4. Plateau rate independent of D over a decade.
fn c4() -> Verdict {
    let cfg = preset("inverted_oscillator").expect("preset");
    let dir = scratch("c4");
    let out = match sweep(&cfg, Axis::Diffusion, &[0.02, 0.2], 1, &dir) {
        Ok(o) => o,
        Err(e) => return fail(format!("sweep failed: {e}")),
    };
    let mut rates = Vec::new();
    for r in &out.rows {
        match r.plateau_rate {
            Some(rate) if r.status == "completed" => rates.push(rate),
            _ => {
                return fail(format!(
                    "D = {}: {} ({})",
                    r.value,
                    r.status,
                    r.error.as_deref().unwrap_or("no plateau fitted")
                ))
            }
        }
    }
    let change = (rates[1] - rates[0]).abs() / rates[0];
    verdict(change <= 0.05, format!("plateau rates {:.4} / {:.4}: change {change:.3} (tol 0.05)", rates[0], rates[1]))
}

// 5. Harmonic oscillator is regular with t^-1 decay.
fn c5(s: &mut Shared) -> Verdict {
    let o = s.harmonic.get_or_insert_with(|| run_preset("harmonic"));
    let Some(v) = o.verdict() else {
        return fail(format!("no verdict: {}; {}", o.report.classify_error.as_deref().unwrap_or("?"), abort_note(o)));
    };
    verdict(
        v.classification == Classification::Regular && (v.decay_exponent + 1.0).abs() <= 0.3,
        format!(
            "{:?}, alpha = {:.3} (need -1 +- 0.3) over [{:.1}, {:.1}]",
            v.classification, v.decay_exponent, v.fit_window[0], v.fit_window[1]
        ),
    )
}

// 6. Driven double well is chaotic with a plateau near lambda+ for three D.
fn c6(s: &mut Shared) -> Verdict {
    let lp = s.lambda_plus();
    let cfg = preset("double_well_driven").expect("preset");
    let ds = [0.0015, 0.005, 0.015];
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, &d) in ds.iter().enumerate() {
        let member = Axis::Diffusion.apply(&cfg, d);
        let o = match execute(&member, &scratch(&format!("c6_{i}"))) {
            Ok(o) => o,
            Err(e) => return fail(format!("D = {d}: {e}")),
        };
        match o.verdict() {
            Some(v) => {
                let ok = v.classification == Classification::Chaotic && (0.75..=1.25).contains(&v.plateau_ratio);
                pass &= ok;
                parts.push(format!("D={d}: {:?} ratio {:.3}", v.classification, v.plateau_ratio));
            }
            None => {
                pass = false;
                let why = o.abort.as_ref().map(|e| e.to_string()).or(o.report.classify_error.clone()).unwrap_or_default();
                parts.push(format!("D={d}: no verdict ({why})"));
            }
        }
        s.double_well.push(o);
    }
    verdict(pass, format!("lambda+ = {lp:.5}; {}", parts.join("; ")))
}

#[derive(Default)]
struct MeanX(Vec<(f64, f64)>);

impl Observer for MeanX {
    fn on_sample(&mut self, _w: &WignerField, s: &Sample) -> qchaos_core::Result<()> {
        self.0.push((s.t, s.moments.mean_x));
        Ok(())
    }
}

/// First time the Moyal and Poisson centroids differ by more than `eps`,
/// along with the time the Moyal run stopped.
fn divergence_time(hbar: f64, n: usize, delta_p: f64, eps: f64, t_max: f64) -> (Option<f64>, f64, Option<String>) {
    let g = PhaseSpaceGrid::matched(n, 4.0, hbar).expect("grid");
    let v = PotentialSpec::double_well_driven(0.3, 1.0);
    let spec = GaussianSpec { x0: 0.3, p0: 0.1, sigma_x: hbar / (2.0 * delta_p), sigma_p: delta_p, xp_correlation: 0.0 };
    let w0 = make_gaussian(&spec, &g).expect("state");
    let env = EnvironmentParams::closed(1.0, hbar).expect("env");
    let dt = 1.0 / 30.0;
    let cfg = EvolutionConfig {
        dt,
        t_max,
        bracket_mode: BracketMode::MoyalExact,
        friction_enabled: false,
        snapshot_stride: 0,
        diagnostics_stride: 1,
    };
    let mut quantum = MeanX::default();
    let abort = run(&w0, &v, &env, &cfg, &mut [&mut quantum]).err().map(|e| e.to_string());
    // The Liouville reference is followed without the boundary check: its
    // filaments fall below the grid spacing long before the quantum state
    // does, which shows up as aliasing far from the centroid.
    let mut prop = Propagator::new(&g, &v, &env, BracketMode::Poisson, dt, false).expect("propagator");
    let mut w = w0;
    let t_end = quantum.0.last().map_or(0.0, |s| s.0);
    for &(t, qx) in &quantum.0 {
        if t > 0.0 {
            prop.step(&mut w).expect("step");
        }
        if (w.moments().mean_x - qx).abs() > eps {
            return (Some(t), t_end, abort);
        }
    }
    (None, t_end, abort)
}

// 7. Divergence time shifts by ln 4 / lambda+ when hbar drops fourfold.
fn c7(s: &mut Shared) -> Verdict {
    let lp = s.lambda_plus();
    let (eps, delta_p) = (0.01, 0.1);
    let expected = 4f64.ln() / lp;
    let (ta, ea, aa) = divergence_time(0.04, 512, delta_p, eps, 30.0);
    let (tb, eb, ab) = divergence_time(0.01, 2048, delta_p, eps, 30.0);
    let describe = |t: Option<f64>, end: f64, abort: &Option<String>| match t {
        Some(t) => format!("{t:.3}"),
        None => format!("none before t = {end:.2} ({})", abort.as_deref().unwrap_or("completed")),
    };
    let (Some(ta), Some(tb)) = (ta, tb) else {
        return fail(format!(
            "divergence at hbar 0.04: {}; at hbar 0.01: {}",
            describe(ta, ea, &aa),
            describe(tb, eb, &ab)
        ));
    };
    let shift = tb - ta;
    verdict(
        (shift - expected).abs() <= 0.3 * expected,
        format!(
            "threshold {eps}: t(0.04) = {ta:.3}, t(0.01) = {tb:.3}, shift {shift:.3} vs ln4/lambda+ = {expected:.3} (band [{:.3}, {:.3}])",
            0.7 * expected,
            1.3 * expected
        ),
    )
}

// 8. Unitarity and transform checks.
fn c8(s: &mut Shared) -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;

    let hbar = 0.04;
    let g = PhaseSpaceGrid::matched(256, 3.2, hbar).expect("grid");
    let v = PotentialSpec::double_well_driven(0.3, 1.0);
    let w0 = make_gaussian(&GaussianSpec::coherent(0.3, 0.1, 0.2, hbar), &g).expect("state");
    let env = EnvironmentParams::closed(1.0, hbar).expect("env");
    let cfg = EvolutionConfig {
        dt: 0.02,
        t_max: 10.0,
        bracket_mode: BracketMode::MoyalExact,
        friction_enabled: false,
        snapshot_stride: 0,
        diagnostics_stride: 10,
    };
    // The purity run needs room for the chaotic sea; a 6.4-wide box is left near t = 2.4.
    let gp = PhaseSpaceGrid::matched(512, 4.0, hbar).expect("grid");
    let wp = make_gaussian(&GaussianSpec::coherent(0.3, 0.1, (0.5 * hbar).sqrt(), hbar), &gp).expect("state");
    match run(&wp, &v, &env, &cfg, &mut []) {
        Ok(rec) => {
            let p0 = rec.samples[0].purity;
            let drift = rec.samples.iter().skip(1).map(|s| (s.purity - p0).abs() / s.t).fold(0.0, f64::max);
            pass &= drift <= 1e-6;
            parts.push(format!("purity drift {drift:.2e}/unit t (tol 1e-6)"));
        }
        Err(e) => {
            pass = false;
            parts.push(format!("closed run failed: {e}"));
        }
    }

    let mut worst_norm = 0.0f64;
    let diffusive = env.with_diffusion(0.002).expect("diffusion");
    for mode in [BracketMode::MoyalExact, BracketMode::Truncated(1), BracketMode::Poisson] {
        for e in [&env, &diffusive] {
            let mut prop = Propagator::new(&g, &v, e, mode, 0.005, false).expect("propagator");
            let mut w = w0.clone();
            let n0 = w.norm();
            prop.advance(&mut w, 1000).expect("advance");
            worst_norm = worst_norm.max((w.norm() - n0).abs());
        }
    }
    pass &= worst_norm <= 1e-8;
    parts.push(format!("norm drift {worst_norm:.2e} per 1e3 steps (tol 1e-8)"));

    let gc = PhaseSpaceGrid::matched(256, 20.0, 1.0).expect("grid");
    let cat = make_cat(6.0, &GaussianSpec::coherent(0.0, 0.5, 0.5f64.sqrt(), 1.0), &gc).expect("cat");
    let back = density_to_wigner(&wigner_to_density(&cat).expect("density"), &gc).expect("wigner");
    let round = back.sup_distance(&cat).expect("same grid") / cat.max_abs();
    pass &= round <= 1e-10;
    parts.push(format!("round trip {round:.2e} (tol 1e-10)"));

    let mut samples = 0;
    let mut worst_gap = f64::INFINITY;
    s.inverted();
    s.harmonic.get_or_insert_with(|| run_preset("harmonic"));
    if s.double_well.is_empty() {
        s.double_well.push(run_preset("double_well_driven"));
    }
    let runs = s.inverted.iter().chain(s.harmonic.iter()).chain(s.double_well.iter());
    for r in runs.flat_map(|o| o.rows.iter()) {
        if let Some(vn) = r.von_neumann {
            samples += 1;
            worst_gap = worst_gap.min(vn - r.linear_entropy);
        }
    }
    if samples == 0 {
        pass = false;
        parts.push("no run samples to check entropy ordering".into());
    } else {
        pass &= worst_gap >= 0.0;
        parts.push(format!("von Neumann - linear >= {worst_gap:.2e} over {samples} samples"));
    }
    verdict(pass, parts.join("; "))
}

// 9. Lyapunov exponents.
fn c9(s: &mut Shared) -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    let start = TrajectoryState::new(0.5, 0.2, 0.0);
    let harmonic = benettin_spectrum(&start, &PotentialSpec::harmonic(), 0.01, 2e4, 10).expect("benettin");
    pass &= harmonic.lambda_plus().abs() <= 1e-3;
    parts.push(format!("harmonic {:.2e} (0 +- 1e-3)", harmonic.lambda_plus()));
    let inverted = benettin_spectrum(&start, &PotentialSpec::inverted(1.0), 0.01, 600.0, 10).expect("benettin");
    pass &= (inverted.lambda_plus() - 1.0).abs() <= 1e-3;
    parts.push(format!("inverted {:.6} (1 +- 1e-3)", inverted.lambda_plus()));

    let v = PotentialSpec::double_well_driven(0.3, 1.0);
    let x = TrajectoryState::new(0.3, 0.1, 0.0);
    let t_total = 4e5;
    let base = benettin_spectrum(&x, &v, 0.005, t_total, 10).expect("benettin").lambda_plus();
    let half_dt = benettin_spectrum(&x, &v, 0.0025, t_total, 10).expect("benettin").lambda_plus();
    let half_stride = benettin_spectrum(&x, &v, 0.005, t_total, 5).expect("benettin").lambda_plus();
    let (ddt, dstride) = ((half_dt - base).abs() / base, (half_stride - base).abs() / base);
    pass &= ddt <= 0.01 && dstride <= 0.01;
    parts.push(format!(
        "double well {base:.5}; dt halved {half_dt:.5} ({:.2}%), stride halved {half_stride:.5} ({:.2}%) (tol 1%)",
        100.0 * ddt,
        100.0 * dstride
    ));
    s.lambda_plus.get_or_insert(base);
    verdict(pass, parts.join("; "))
}

// 10. Liouville evolution of the Wigner function reproduces the
//     covariance of a classical ensemble.
fn c10(s: &mut Shared) -> Verdict {
    let lp = s.lambda_plus();
    let t_end = 5.0 / lp;
    let hbar = 0.02;
    let spec = GaussianSpec::coherent(0.3, 0.1, 0.1, hbar);
    let v = PotentialSpec::double_well_driven(0.3, 1.0);
    let g = PhaseSpaceGrid::new(2048, 2048, [-3.0, 3.0], [-3.5, 3.5], hbar).expect("grid");
    let env = EnvironmentParams::closed(1.0, hbar).expect("env");
    let every = 0.5;
    let steps = 15;
    let mut prop = Propagator::new(&g, &v, &env, BracketMode::Poisson, every / steps as f64, false).expect("propagator");
    let mut w = make_gaussian(&spec, &g).expect("state");
    let n_checks = (t_end / every).ceil() as usize;
    let mut wigner = vec![w.moments()];
    for _ in 0..n_checks {
        prop.advance(&mut w, steps).expect("advance");
        wigner.push(w.moments());
    }

    // Independent batches give the sampling error of each covariance entry.
    let (batches, members) = (40, 500);
    let t_last = n_checks as f64 * every;
    let dt = 0.005;
    let stride = (every / dt).round() as usize;
    let runs: Vec<Vec<EnsembleMoments>> = (0..batches)
        .map(|b| {
            let cloud = sample_gaussian_cloud(&spec, members, 1000 + b as u64);
            ensemble_spread(&cloud, &v, dt, t_last, stride).expect("ensemble")
        })
        .collect();
    let mut worst = (0.0f64, 0.0, "");
    for (i, m) in wigner.iter().enumerate() {
        for (name, a, b) in [("var_x", 0, 0), ("cov_xp", 0, 1), ("var_p", 1, 1)] {
            let xs: Vec<f64> = runs.iter().map(|r| r[i].covariance[a][b]).collect();
            let mean = xs.iter().sum::<f64>() / batches as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
            let se = (var / batches as f64).sqrt();
            let z = (m.covariance[a][b] - mean).abs() / se;
            if z > worst.0 {
                worst = (z, i as f64 * every, name);
            }
        }
    }
    verdict(
        worst.0 <= 3.0,
        format!(
            "{} checks to t = {t_last:.1} (5/lambda+); worst |z| {:.2} ({} at t = {:.1}), tol 3",
            wigner.len(),
            worst.0,
            worst.2,
            worst.1
        ),
    )
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().map_or(true, |o| o.contains(&n));
    let mut shared = Shared::default();
    let names = [
        "pure-decoherence exactness",
        "inverted-oscillator entropy rate",
        "critical dispersion",
        "coupling independence of the plateau",
        "integrable decay",
        "chaotic classification",
        "Ehrenfest-time scaling",
        "unitarity and transforms",
        "Lyapunov module",
        "classical-limit consistency",
    ];
    // Order matters only for sharing: 9 fixes lambda+, 8 reads the runs of
    // 2, 5 and 6.
    let order = [1, 9, 2, 3, 4, 5, 6, 7, 10, 8];
    let mut results: Vec<(usize, Verdict, f64)> = Vec::new();
    for n in order {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let v = match n {
            1 => c1(),
            2 => c2(&mut shared),
            3 => c3(&mut shared),
            4 => c4(),
            5 => c5(&mut shared),
            6 => c6(&mut shared),
            7 => c7(&mut shared),
            8 => c8(&mut shared),
            9 => c9(&mut shared),
            _ => c10(&mut shared),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("[{}] {n} {}: {} ({secs:.0} s)", if v.pass { "PASS" } else { "FAIL" }, names[n - 1], v.detail);
        results.push((n, v, secs));
    }
    let _ = std::fs::remove_dir_all(scratch_root());
    results.sort_by_key(|r| r.0);
    let failed: Vec<String> = results.iter().filter(|r| !r.1.pass).map(|r| r.0.to_string()).collect();
    println!(
        "acceptance: {}/{} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
