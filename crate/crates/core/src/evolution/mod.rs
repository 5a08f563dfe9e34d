//! Split-step evolution of the Wigner-space master equation.

mod env;
mod propagator;
mod run;

pub use env::EnvironmentParams;
pub use propagator::{
    default_dt, diffusion_attenuation, diffusion_step, friction_step, kinetic_step, potential_step,
    stability_limit, step, BracketMode, EvolutionConfig, Propagator,
};
pub use run::{run, Observer, RunRecord, Sample, SnapshotEntry, EDGE_ABORT, NORM_ABORT};
