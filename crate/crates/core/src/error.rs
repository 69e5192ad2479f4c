use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported source file: {0}")]
    UnsupportedFile(String),

    #[error("report {0} has neither title nor description")]
    EmptyDocument(String),

    #[error("model corrupt: document frequency of term {term} would become negative")]
    DfUnderflow { term: u32 },

    #[error("corpus size would drop below 1 (M = {m}, delta = {delta})")]
    InvalidCorpus { m: usize, delta: i64 },

    #[error("change set rejected: {}", join(.0))]
    ChangeSetRejected(Vec<PathError>),

    #[error("document not found: {0}")]
    DocNotFound(String),

    #[error("duplicate report id: {0}")]
    DuplicateReport(String),

    #[error("report {0} has no fixed files")]
    MissingFixedFiles(String),

    #[error("unknown report: {0}")]
    ReportNotFound(String),

    #[error("document length {len} outside corpus range [{min}, {max}]")]
    LengthOutOfRange { len: usize, min: usize, max: usize },

    #[error("code corpus is empty")]
    EmptyCorpus,

    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("top_k must be at least 1")]
    InvalidTopK,

    #[error("relevant set is empty")]
    Unjudgeable,

    #[error("no judgeable evaluation cases")]
    NoJudgeableCases,

    #[error("incremental and full rankings differ at transition {transition}")]
    RankingMismatch { transition: usize },

    #[error("invalid bug report on line {line}: {message}")]
    ReportParse { line: usize, message: String },

    #[error("invalid ignore pattern: {0}")]
    IgnorePattern(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a model snapshot (bad magic)")]
    BadMagic,

    #[error("unsupported snapshot version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("snapshot checksum mismatch")]
    ChecksumMismatch,

    #[error("snapshot truncated")]
    Truncated,

    #[error("snapshot built with different stopword lists; re-index required")]
    IncompatibleStoplist,

    #[error("snapshot inconsistent: {0}")]
    Corrupt(String),
}

/// Why a single path in a change set was refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathError {
    AlreadyPresent(String),
    Missing(String),
    Duplicate(String),
}

impl std::fmt::Display for PathError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathError::AlreadyPresent(p) => write!(f, "{p} already indexed"),
            PathError::Missing(p) => write!(f, "{p} not indexed"),
            PathError::Duplicate(p) => write!(f, "{p} listed more than once"),
        }
    }
}

fn join(errors: &[PathError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
