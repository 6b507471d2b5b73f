use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("orphan record `{id}`: no matching {missing} file")]
    OrphanRecord { id: String, missing: &'static str },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("untagged transcript `{0}`: no [speaker] tag found")]
    UntaggedTranscript(String),

    #[error("preamble in `{source_id}` at byte offset {offset}: text precedes the first speaker tag")]
    Preamble { source_id: String, offset: usize },

    /// Wraps a failure with the encounter it belongs to.
    #[error("encounter `{id}`: {source}")]
    Encounter {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("no reference text for id `{0}`")]
    MissingReference(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_encounter(self, id: &str) -> Self {
        Error::Encounter {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by how the tool was invoked rather than by the data.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => true,
            Error::Encounter { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
