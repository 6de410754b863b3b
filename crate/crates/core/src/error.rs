use thiserror::Error;

/// Errors produced by the analysis library and the CLI front end.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The inputs are valid but the formulas leave their domain of validity
    /// (non-positive log argument, singular sensitivity system, ...).
    #[error("numerical regime error: {0}")]
    NumericalRegime(String),

    /// An iterative solver hit its iteration cap.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Configuration file problems (parse errors, missing blocks, bad fields).
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::NumericalRegime(msg.into())
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::Io(_) => 2,
            Error::NumericalRegime(_) => 3,
            Error::NonConvergence { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
