use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps these onto exit codes: configuration problems -> 1,
/// solver/numeric failures -> 2, I/O failures -> 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration; the message names every offending key.
    #[error("config error: {0}")]
    Config(String),

    /// An argument outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A rate demand at or above the link's rate ceiling; no finite bandwidth
    /// can meet it. The caller must allow more transmission time.
    #[error("infeasible rate: required {required:.6e} bit/s, ceiling {ceiling:.6e} bit/s")]
    InfeasibleRate { required: f64, ceiling: f64 },

    /// The analytic reduction of the allocation problem does not apply;
    /// the split ratio must be swept instead of fixed.
    #[error("reduction invalid: {0}")]
    ReductionInvalid(String),

    /// The structured solver failed (should not happen on valid scenarios).
    #[error("solver error: {0}")]
    Solver(String),

    /// Learning hyperparameters violate a convergence hypothesis.
    #[error("hyperparameter error: {0}")]
    Hyperparameter(String),

    /// Matrix/vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The cached global gradient does not belong to the current round.
    #[error("stale global gradient: cached round {cached}, current round {current}")]
    StaleGradient { cached: u64, current: u64 },

    /// A report operation referenced a strategy that was not run.
    #[error("strategy {0} missing from report")]
    MissingStrategy(String),

    /// Filesystem failure, with the path that caused it.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// File content that could not be parsed.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
