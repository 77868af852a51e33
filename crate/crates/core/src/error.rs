use thiserror::Error;

/// Errors raised by the linear-algebra and epidemiological routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input: wrong shape, index out of range, invalid parameter.
    #[error("rejected input: {0}")]
    Rejected(String),

    /// A matrix was singular to working tolerance.
    #[error("singular matrix ({context}): pivot magnitude {pivot:e}")]
    Singular { context: String, pivot: f64 },

    /// An iterative routine did not converge.
    #[error("no convergence ({context}): residual {residual:e}")]
    Convergence { context: String, residual: f64 },
}

impl Error {
    pub(crate) fn rejected(msg: impl Into<String>) -> Self {
        Error::Rejected(msg.into())
    }

    /// Replaces the context of a singularity error, leaving other variants untouched.
    pub(crate) fn with_singular_context(self, context: impl Into<String>) -> Self {
        match self {
            Error::Singular { pivot, .. } => Error::Singular {
                context: context.into(),
                pivot,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
