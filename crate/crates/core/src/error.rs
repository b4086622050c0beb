use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate key {0}")]
    DuplicateKey(String),

    #[error("invalid vector for {key}: {msg}")]
    InvalidVector { key: String, msg: String },

    #[error("similarity undefined: {0}")]
    UndefinedSimilarity(String),

    #[error("key not found: {0}")]
    KeyNotFound(String),

    #[error("invalid graph: hypernym cycle through edge {child} -> {parent}")]
    Cycle { child: String, parent: String },

    #[error("referential integrity: {0}")]
    Reference(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_owned(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
