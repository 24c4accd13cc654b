use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimation, planning and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bearing undefined: AMAV and BMAV positions coincide")]
    CoincidentPositions,

    #[error("singular linearization: range {0:e} m is below the minimum")]
    SingularLinearization(f64),

    #[error("innovation covariance is not invertible")]
    SingularInnovation,

    #[error("posterior covariance is not positive semi-definite (min eigenvalue {0:e})")]
    NotPositiveSemiDefinite(f64),

    #[error("grouping requires at least one AMAV")]
    NoAmavs,

    #[error("planning horizon must be at least one step")]
    ZeroHorizon,

    #[error("motion primitive set is empty")]
    NoPrimitives,

    #[error("cannot plan for an empty BMAV group")]
    EmptyGroup,

    #[error("BMAV index {index} is out of range for {count} beliefs")]
    UnknownBmav { index: usize, count: usize },

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
