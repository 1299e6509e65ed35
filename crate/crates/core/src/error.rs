use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad family id, parameter set or domain in a model description.
    #[error("invalid model: {0}")]
    Model(String),

    /// An argument fell outside the parameter set or the time horizon.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller broke a precondition (wrong derivative order, mismatched grids, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A recursion produced a non-finite or negative value.
    #[error("numerical failure at step {step}: {what}")]
    Numerical { step: usize, what: String },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("singular information: {0}")]
    Singular(String),

    #[error("insufficient data: need at least {needed} entries, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("identifiability check failed: {0}")]
    Identifiability(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical { .. } | Error::Estimation(_) | Error::Singular(_)
        )
    }
}
