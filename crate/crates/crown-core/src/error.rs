//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// Configuration-level variants ([`Error::ConfigInvalid`], [`Error::UnknownPreset`],
/// [`Error::UnknownMetric`]) indicate bad user input detected before any work is
/// done; everything else is a runtime failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed content in a text file, with a 1-based line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate passage id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },

    /// A structurally valid input that violates a documented invariant
    /// (e.g. non-contiguous turn numbers, empty turn list).
    #[error("validation failed: {0}")]
    Validation(String),

    /// Binary artifact does not start with the expected magic bytes.
    #[error("{path}: not a {expected} file")]
    BadMagic { path: PathBuf, expected: String },

    /// Binary artifact carries an unsupported format version.
    #[error("{path}: unsupported {family} version {found:?}")]
    VersionMismatch {
        path: PathBuf,
        family: String,
        found: String,
    },

    /// Binary artifact ended before all declared content was read.
    #[error("{path}: truncated file")]
    Truncated { path: PathBuf },

    /// The token pair was never counted; callers treat this as "no edge".
    #[error("no co-occurrence recorded for ({x:?}, {y:?})")]
    NoCooccurrence { x: String, y: String },

    #[error("cannot build an index from an empty passage store")]
    EmptyStore,

    /// No query token matched the index vocabulary, or a union of
    /// retrievals produced nothing.
    #[error("query {query_id:?} produced no candidates")]
    EmptyCandidates { query_id: String },

    #[error("turn {t} out of range 1..={total}")]
    TurnOutOfRange { t: usize, total: usize },

    #[error("rank {0} is not a valid 1-based rank")]
    InvalidRank(usize),

    /// Cosine similarity is undefined for a zero-norm vector.
    #[error("undefined similarity: zero-norm vector")]
    ZeroNorm,

    #[error("vector length mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unknown preset {0:?} (expected igraph, intu, union, or cqw)")]
    UnknownPreset(String),

    #[error("unknown metric {0:?} (expected ndcg@k, err@k, or ap@k)")]
    UnknownMetric(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// True for errors that stem from user-supplied configuration rather
    /// than from I/O or data; CLI maps these to a usage exit code.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::ConfigInvalid(_) | Error::UnknownPreset(_) | Error::UnknownMetric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
