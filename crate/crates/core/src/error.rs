use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = BsaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BsaError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("vector is not constant-modulus (max relative deviation {max_deviation:.3e})")]
    NotConstantModulus { max_deviation: f64 },

    #[error("zero vector")]
    ZeroVector,

    #[error("{what} is rank deficient at subcarrier {subcarrier}")]
    RankDeficient { what: &'static str, subcarrier: usize },

    #[error("empty dictionary")]
    EmptyDictionary,

    #[error("channel redrawn {attempts} times without a usable realization")]
    RedrawCapExceeded { attempts: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BsaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BsaError::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether a trial hitting this error should be redrawn with a fresh
    /// channel realization.
    pub fn is_degenerate_geometry(&self) -> bool {
        matches!(self, BsaError::RankDeficient { .. })
    }
}
