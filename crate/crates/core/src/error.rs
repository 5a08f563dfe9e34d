use thiserror::Error;

/// Errors raised by grid construction, state preparation, propagation and
/// the diagnostics that consume them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state does not fit on the grid: {0}")]
    StateOutsideGrid(String),

    #[error("state is undersampled by the grid: {0}")]
    Undersampled(String),

    #[error("illegal covariance: determinant {det:.6e} is below (hbar/2)^2 = {bound:.6e}")]
    IllegalCovariance { det: f64, bound: f64 },

    #[error("interference fringe undersampled: wavelength {wavelength:.4e} is shorter than 4 momentum spacings ({spacing:.4e} each)")]
    FringeUndersampled { wavelength: f64, spacing: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("density matrix has eigenvalue {0:.3e} below the -1e-8 noise floor")]
    NegativeSpectrum(f64),

    #[error("nonlinearity scale undefined: potential gradient vanishes at x = {x}")]
    ZeroGradient { x: f64 },

    #[error("timestep {dt:.4e} too large: {which} phase exceeds pi per sample (limit {limit:.4e})")]
    TimestepTooLarge {
        dt: f64,
        limit: f64,
        which: &'static str,
    },

    #[error("friction rescaling pushes support off the momentum grid (edge value {edge:.3e})")]
    FrictionSupport { edge: f64 },

    #[error("run aborted at t = {t:.6}: {report}")]
    IntegrityBreach { t: f64, report: String },

    #[error("fit window too short: {0}")]
    WindowTooShort(String),

    #[error("entropy saturates at t = {saturation:.4} before the fit window opens at t = {open:.4}")]
    SaturatedBeforeWindow { open: f64, saturation: f64 },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
