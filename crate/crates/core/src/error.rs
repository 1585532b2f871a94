use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Lex { line: usize, message: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("corpus of {size} records is smaller than k={k}")]
    CorpusTooSmall { size: usize, k: usize },

    #[error("bad magic: not a model file")]
    BadMagic,

    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated model file")]
    Truncated,

    #[error("malformed model file: {0}")]
    Malformed(String),

    #[error("malformed vocabulary: {0}")]
    Vocabulary(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
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

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
