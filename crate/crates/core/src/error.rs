use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A precondition on an input matrix was violated (e.g. non-Hermitian input
    /// to the PSD projection).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("could not place {shifts} shift pairs with separation {min_separation} after {attempts} attempts")]
    SeparationInfeasible {
        shifts: usize,
        min_separation: f64,
        attempts: usize,
    },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
