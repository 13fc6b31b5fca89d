use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty posterior: the contrast is +inf at every grid node")]
    EmptyPosterior,

    #[error("contrast evaluation failed at {point:?} (value {value})")]
    Evaluation { point: Vec<f64>, value: f64 },

    #[error("degenerate posterior: {0}")]
    DegeneratePosterior(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("matrix is not positive semi-definite: {0}")]
    NotPositiveSemiDefinite(String),

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("quadrature schemes disagree: {first} vs {second} (relative {relative:e})")]
    QuadratureMismatch {
        first: f64,
        second: f64,
        relative: f64,
    },

    #[error("too many failed replications: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("resource guard: {0}")]
    ResourceLimit(String),

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

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for I/O and file-format problems, as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. })
    }
}
