use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A config problem, attributed to a field and, when the user's text sets
/// that field, to its line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub(crate) fn from_toml(e: &toml::de::Error, text: &str, preset: Option<&str>) -> Self {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let message = match preset {
            Some(p) => format!("in preset {p:?}: {}", e.message()),
            None => e.message().to_string(),
        };
        Self { field: String::new(), line, message }
    }

    pub(crate) fn with_source(self, source: String) -> SourcedConfigError {
        SourcedConfigError { source, inner: self }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.field.is_empty()) {
            (Some(l), false) => write!(f, "line {l}, {}: {}", self.field, self.message),
            (Some(l), true) => write!(f, "line {l}: {}", self.message),
            (None, false) => write!(f, "{}: {}", self.field, self.message),
            (None, true) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct SourcedConfigError {
    pub source: String,
    pub inner: ConfigError,
}

impl fmt::Display for SourcedConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.source, self.inner)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(SourcedConfigError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] qchaos_core::Error),

    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("{0}")]
    Report(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.with_source("config".into()))
    }
}

impl CliError {
    /// Process exit status: 2 for config problems, 3 for numerical
    /// integrity aborts, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use qchaos_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::IntegrityBreach { .. } | E::NegativeSpectrum(_) | E::FrictionSupport { .. }) => 3,
            CliError::Core(
                E::InvalidGrid(_)
                | E::InvalidParameter(_)
                | E::StateOutsideGrid(_)
                | E::Undersampled(_)
                | E::IllegalCovariance { .. }
                | E::FringeUndersampled { .. }
                | E::TimestepTooLarge { .. },
            ) => 2,
            _ => 1,
        }
    }
}
