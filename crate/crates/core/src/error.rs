use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid delay law: {0}")]
    InvalidDelay(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {found}")]
    Shape { expected: String, found: String },

    #[error("non-finite state: {0}")]
    NonFinite(String),

    #[error("history lookback at t = {query} outside buffer span [{start}, {end}]")]
    Lookback { query: f64, start: f64, end: f64 },

    #[error("state diverged at t = {0}")]
    Diverged(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("jacobi iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("bounds refused: {0}")]
    BoundsRefused(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by a malformed configuration or invocation rather than by the dynamics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidPotential(_)
                | Error::InvalidDelay(_)
                | Error::InvalidParams(_)
                | Error::InvalidScenario(_)
        )
    }
}
