use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SmfError>;

#[derive(Debug, Error)]
pub enum SmfError {
    #[error("i/o error on {path}: {source}")]
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

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("node id {node} out of range (n = {n})")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("unknown node label '{0}'")]
    UnknownLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("normal-equation matrix is not positive definite (smallest pivot {pivot:e})")]
    NotPositiveDefinite { pivot: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("section {section} failed: {source}")]
    Section {
        section: usize,
        #[source]
        source: Box<SmfError>,
    },
}

impl SmfError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SmfError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical kernels as opposed to bad input data.
    pub fn is_numerical(&self) -> bool {
        match self {
            SmfError::NotPositiveDefinite { .. } | SmfError::Numerical(_) => true,
            SmfError::Section { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
