use thiserror::Error;

/// Process exit status for a run that produced its report.
pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Failures that stop a command before it can produce output.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or out-of-range configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Singular matrix or failed convergence during evaluation.
    #[error("numerical error: {0}")]
    Numerical(ngm_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    /// Wraps a core error, prefixing rejected input with the config field it came from.
    pub fn from_core(field: &str, err: ngm_core::Error) -> Self {
        match err {
            ngm_core::Error::Rejected(msg) if field.is_empty() => CliError::Config(msg),
            ngm_core::Error::Rejected(msg) => CliError::Config(format!("{field}: {msg}")),
            other => CliError::Numerical(other),
        }
    }
}

impl From<ngm_core::Error> for CliError {
    fn from(err: ngm_core::Error) -> Self {
        CliError::from_core("", err)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Config(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
