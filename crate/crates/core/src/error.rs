use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value outside its valid domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("malformed input {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate run_id {0}")]
    DuplicateRunId(u64),

    #[error("no series rows for run_id {0}")]
    MissingSeries(u64),

    #[error("event log refers to vertex {vertex} but graph has {n} vertices")]
    UnknownVertex { vertex: u32, n: usize },

    #[error("run {0}: regenerated trajectory does not match the stored series")]
    Inconsistent(u64),

    #[error("no defined estimates to aggregate")]
    EmptyEstimateSet,

    #[error("no truth value for run_id {0}")]
    MissingTruth(u64),

    #[error("empty {0} set")]
    EmptySet(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        match source.kind() {
            csv::ErrorKind::Io(_) => match source.into_kind() {
                csv::ErrorKind::Io(e) => Error::io(path, e),
                _ => unreachable!(),
            },
            _ => Error::Csv {
                path: path.into(),
                source,
            },
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Whether the failure came from the filesystem rather than from the
    /// content or configuration.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
