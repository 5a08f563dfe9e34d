//! Shared fixtures for the benchmarks.

use qchaos_core::phase_space::make_gaussian;
use qchaos_core::{EnvironmentParams, GaussianSpec, PhaseSpaceGrid, PotentialSpec, WignerField};

/// Driven double well with a coherent state in the chaotic sea on an
/// `n x n` matched grid.
pub struct Fixture {
    pub grid: PhaseSpaceGrid,
    pub potential: PotentialSpec,
    pub env: EnvironmentParams,
    pub state: WignerField,
}

pub fn double_well(n: usize) -> Fixture {
    let hbar = 0.02 * 512.0 / n as f64;
    let grid = PhaseSpaceGrid::matched(n, 3.2, hbar).expect("grid");
    let potential = PotentialSpec::double_well_driven(0.3, 1.0);
    let env = EnvironmentParams::closed(1.0, hbar).expect("env").with_diffusion(0.005).expect("diffusion");
    let state = make_gaussian(&GaussianSpec::coherent(0.3, 0.1, 0.1 * (hbar / 0.02).sqrt(), hbar), &grid).expect("state");
    Fixture { grid, potential, env, state }
}
