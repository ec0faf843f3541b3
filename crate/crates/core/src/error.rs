use std::path::PathBuf;

/// Errors produced by the retrieval core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
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

    #[error("invalid document {record}: {message}")]
    InvalidDocument { record: String, message: String },

    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),

    #[error("collection is empty")]
    EmptyCollection,

    #[error("index file {file} is corrupt: {message}")]
    Corrupt { file: String, message: String },

    #[error("unsupported index format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("document vectors not stored in this index")]
    DocvectorsNotStored,

    #[error("positions not stored in this index")]
    PositionsNotStored,

    #[error("document contents not stored in this index")]
    RawNotStored,

    #[error("unknown document id `{0}`")]
    UnknownDocId(String),

    #[error("dimension mismatch for `{id}`: expected {expected}, found {found}")]
    DimensionMismatch { id: String, expected: usize, found: usize },

    #[error("non-finite value in vector `{0}`")]
    NonFinite(String),

    #[error("query id mismatch: `{0}` vs `{1}`")]
    QidMismatch(String, String),

    #[error("invalid run: {0}")]
    InvalidRun(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("regression spec: {0}")]
    Spec(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn corrupt(file: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Corrupt {
            file: file.into(),
            message: message.into(),
        }
    }

    /// True for failures caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
