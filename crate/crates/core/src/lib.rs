//! Phase-space simulation of decohering quantum systems.
//!
//! Wigner functions are evolved by a split-step spectral scheme (kinetic
//! shear, exact chord-space potential kernel, momentum diffusion, optional
//! friction). The von Neumann entropy of the evolving state is compared
//! with classical Lyapunov exponents to tell chaotic from regular dynamics.

pub mod classical;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod phase_space;
pub mod potential;
mod spectral;

pub use classical::{LyapunovSpectrum, TrajectoryState};
pub use diagnostics::{ChaosVerdict, Classification, EntropySeries, FitConfig, TimescaleReport};
pub use error::{Error, Result};
pub use evolution::{BracketMode, EnvironmentParams, EvolutionConfig, Propagator, RunRecord};
pub use phase_space::{DensityMatrix, GaussianSpec, Moments, PhaseSpaceGrid, WignerField};
pub use potential::PotentialSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
