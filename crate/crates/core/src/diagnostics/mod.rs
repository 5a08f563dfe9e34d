//! Entropy measures, rate estimation, closed-form timescales and the
//! chaos classifier.

mod classify;
mod entropy;
mod timescales;

pub use classify::{classify, ChaosVerdict, Classification, FitConfig, WindowFit, LAMBDA_FLOOR};
pub use entropy::{
    entropy_rate, finite_difference_rate, linear_entropy, spectrum_entropy, von_neumann_entropy,
    von_neumann_with_spectrum, EntropyRecorder, EntropySeries, RateSample, WEIGHT_CUTOFF,
};
pub use timescales::{
    coherence_length, critical_dispersion, decoherence_time, ehrenfest_time, equilibration_time, hdot_model,
    DecoherenceTime, EquilibrationTime, TimescaleInputs, TimescaleReport, MUCH_LESS,
};
