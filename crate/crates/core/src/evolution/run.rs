use serde::{Deserialize, Serialize};

use super::env::EnvironmentParams;
use super::propagator::{EvolutionConfig, Propagator};
use crate::error::{Error, Result};
use crate::phase_space::{Moments, WignerField};
use crate::potential::PotentialSpec;

/// Norm drift beyond this aborts a run.
pub const NORM_ABORT: f64 = 1e-4;

/// Boundary value, relative to the peak, beyond which the periodic
/// wrap-around of the spectral steps is no longer negligible.
pub const EDGE_ABORT: f64 = 1e-6;

/// Cheap per-sample diagnostics recorded by every run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    pub purity: f64,
    pub moments: Moments,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub step: usize,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<SnapshotEntry>,
}

/// Hooks called during [`run`]. Observers see the state read-only.
pub trait Observer {
    fn on_sample(&mut self, _w: &WignerField, _sample: &Sample) -> Result<()> {
        Ok(())
    }

    fn on_snapshot(&mut self, _w: &WignerField, _entry: &SnapshotEntry) -> Result<()> {
        Ok(())
    }
}

/// Evolve `initial` to `config.t_max`, sampling diagnostics every
/// `diagnostics_stride` steps (and at the final step) and taking snapshots
/// every `snapshot_stride` steps.
pub fn run(
    initial: &WignerField,
    spec: &PotentialSpec,
    env: &EnvironmentParams,
    config: &EvolutionConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunRecord> {
    config.validate()?;
    let mut prop = Propagator::new(initial.grid(), spec, env, config.bracket_mode, config.dt, config.friction_enabled)?;
    let n = config.n_steps();
    let norm0 = initial.norm();
    let mut w = initial.clone();
    let mut record = RunRecord { dt: config.dt, steps: n, samples: Vec::new(), snapshots: Vec::new() };
    let diag = config.diagnostics_stride;
    let snap = config.snapshot_stride;

    let mut step = 0;
    loop {
        if step % diag == 0 || step == n {
            let sample = Sample { step, t: w.time(), norm: w.norm(), purity: w.purity(), moments: w.moments() };
            let drift = (sample.norm - norm0).abs();
            if !sample.norm.is_finite() || !sample.purity.is_finite() || drift > NORM_ABORT {
                return Err(Error::IntegrityBreach {
                    t: sample.t,
                    report: format!(
                        "norm {:.12} (drift {drift:.3e} from {norm0:.12}), purity {:.6e} after {step} steps",
                        sample.norm, sample.purity
                    ),
                });
            }
            let edge = w.edge_ratio();
            if edge > EDGE_ABORT {
                return Err(Error::IntegrityBreach {
                    t: sample.t,
                    report: format!("state reached the grid boundary ({edge:.3e} of its peak) after {step} steps"),
                });
            }
            for o in observers.iter_mut() {
                o.on_sample(&w, &sample).map_err(|e| match e {
                    Error::NegativeSpectrum(v) => Error::IntegrityBreach {
                        t: sample.t,
                        report: format!("density spectrum reached {v:.3e}, below the round-off floor"),
                    },
                    other => other,
                })?;
            }
            record.samples.push(sample);
        }
        if snap > 0 && step % snap == 0 {
            let entry = SnapshotEntry { index: record.snapshots.len(), step, t: w.time() };
            for o in observers.iter_mut() {
                o.on_snapshot(&w, &entry)?;
            }
            record.snapshots.push(entry);
        }
        if step == n {
            break;
        }
        let mut next = ((step / diag) + 1) * diag;
        if snap > 0 {
            next = next.min(((step / snap) + 1) * snap);
        }
        let next = next.min(n);
        prop.advance(&mut w, next - step)?;
        // Keep the clock on the nominal grid of step times.
        w.set_time(initial.time() + next as f64 * config.dt);
        step = next;
    }
    Ok(record)
}
