use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or grids that do not fit together.
    #[error("structural mismatch: {0}")]
    Structural(String),
    /// An argument outside the domain of the operation (e.g. a nonpositive scale).
    #[error("domain error: {0}")]
    Domain(String),
    /// NaN or infinity found in a field.
    #[error("poisoned state: {0}")]
    Poisoned(String),
    /// Physical parameters violating a model hypothesis.
    #[error("invalid parameters: {0}")]
    Validation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Operation not defined in the current criticality regime.
    #[error("regime error: {0}")]
    Regime(String),
    /// An iteration stopped without reaching its tolerance.
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("degenerate fixed point: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
