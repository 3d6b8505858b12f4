use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node id out of range: {what} {index} (num_nodes = {num_nodes})")]
    NodeOutOfRange {
        what: &'static str,
        index: usize,
        num_nodes: usize,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("task mismatch: {0}")]
    TaskMismatch(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: line {line}, column {column}: {message}", path.display())]
    Json {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("bad manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
}

impl Error {
    /// Short stable identifier printed in front of CLI error messages.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NodeOutOfRange { .. } => "E-RANGE",
            Error::InvalidGraph(_) => "E-GRAPH",
            Error::Shape { .. } => "E-SHAPE",
            Error::NonFinite(_) => "E-NONFINITE",
            Error::InvalidArgument(_) => "E-ARG",
            Error::TaskMismatch(_) => "E-TASK",
            Error::Divergence { .. } => "E-DIVERGED",
            Error::Io { .. } => "E-IO",
            Error::Json { .. } => "E-JSON",
            Error::Manifest { .. } => "E-MANIFEST",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, err: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
