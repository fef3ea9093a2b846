use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value violates its documented bounds.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input lengths or coefficient layouts do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A metric is undefined for the given input (e.g. PRD of a zero-norm signal).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Requested rate is at or above the residual-SI capacity limit.
    #[error("infeasible rate {rate} bit/s: capacity limit is {limit} bit/s")]
    InfeasibleRate { rate: f64, limit: f64 },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// A run completed but its built-in quality gate did not hold.
    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// True for errors that the CLI reports with the "infeasible" exit code.
    pub fn is_infeasibility(&self) -> bool {
        matches!(self, Error::InfeasibleRate { .. } | Error::Infeasible(_))
    }
}
