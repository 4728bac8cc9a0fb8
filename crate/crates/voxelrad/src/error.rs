//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    #[error("dimension mismatch: {context} ({left} vs {right})")]
    DimensionMismatch {
        context: &'static str,
        left: String,
        right: String,
    },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("malformed header in {path}: {why}")]
    MalformedHeader { path: PathBuf, why: String },

    #[error("missing header key `{key}` in {path}")]
    MissingHeaderKey { path: PathBuf, key: &'static str },

    #[error("unsupported element type `{element_type}` in {path}")]
    UnsupportedElementType {
        path: PathBuf,
        element_type: String,
    },

    #[error("data size mismatch in {path}: header implies {expected} elements, raw file holds {actual}")]
    DataSizeMismatch {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("seed voxel {index:?} out of bounds for dims {dims:?}")]
    SeedOutOfBounds {
        index: (usize, usize, usize),
        dims: (usize, usize, usize),
    },

    #[error("corner seed {index:?} lies inside the coarse body mask; scan touches the grid corner")]
    CornerSeedInsideBody { index: (usize, usize, usize) },

    #[error("metric `{metric}` undefined: {reason}")]
    UndefinedMetric { metric: &'static str, reason: String },

    #[error("objective diverged at iteration {iteration} (objective = {objective})")]
    Diverged {
        iteration: usize,
        objective: f64,
        trace: Vec<crate::recon::TraceRow>,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
