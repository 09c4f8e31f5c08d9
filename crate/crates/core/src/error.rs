use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("staff position {0} is outside [0, 61]")]
    InvalidPosition(usize),

    #[error("column value {0:#x} uses bits above position 61")]
    ColumnOverflow(u64),

    #[error("fragment {fragment}, column {column}: {reason}")]
    BadColumn {
        fragment: usize,
        column: usize,
        reason: String,
    },

    #[error("fragment {fragment} (line_id {line_id}) has no columns")]
    EmptyFragment { fragment: usize, line_id: i64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
