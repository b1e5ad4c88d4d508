use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error in {context}: {message}")]
    Schema { context: String, message: String },

    #[error("index error: node {index} out of range for graph with {num_nodes} nodes")]
    Index { index: usize, num_nodes: usize },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("infeasible: {0}")]
    Feasibility(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a context prefix such as `epoch 3, batch 1`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema { .. } => "schema",
            Error::Index { .. } => "index",
            Error::Validation(_) => "validation",
            Error::Argument(_) => "argument",
            Error::Feasibility(_) => "feasibility",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
            Error::Context { source, .. } => source.kind(),
        }
    }
}
