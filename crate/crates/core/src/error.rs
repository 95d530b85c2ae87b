use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A state variable left its admissible domain (e.g. SBM noise outside [-1, 1]).
    #[error("state corruption: {0}")]
    StateCorruption(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("integrator instability: {0}")]
    Instability(String),

    #[error("inconclusive: {unresolved_fraction} of trajectories did not collapse (limit {limit})")]
    Inconclusive { unresolved_fraction: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot write to {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
