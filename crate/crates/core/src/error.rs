use std::path::PathBuf;

use crate::data::{SegmentKind, WaveKind};

/// Errors produced by `delineate-core`.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("invalid fiducials for {wave}: {reason}")]
    InvalidFiducials { wave: WaveKind, reason: String },

    #[error("{what} out of range: {value} > {limit}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("overlapping annotations in lead {lead}: {first} and {second}")]
    Overlap {
        lead: String,
        first: String,
        second: String,
    },

    #[error("cannot fit amplitude model for {kind}: {usable} usable samples (need at least 2)")]
    Fit { kind: SegmentKind, usable: usize },

    #[error("segment pool has no {kind} templates")]
    EmptyPool { kind: SegmentKind },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
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

    /// True for errors caused by malformed input data rather than numerics.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Numeric(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
