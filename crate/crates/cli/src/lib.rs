//! Config-driven runs, parameter sweeps and reports on top of `qchaos-core`.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod presets;
pub mod runner;
pub mod sweep;

pub use config::{parse_config, RunConfig};
pub use error::{CliError, ConfigError};
pub use runner::{execute, report, RunOutcome};
pub use sweep::{sweep, Axis};
