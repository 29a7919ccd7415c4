use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::Part;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic {found:?}, expected \"EMB1\"")]
    BadMagic { found: Vec<u8> },

    #[error("truncated embedding file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("embedding file has {extra} trailing bytes after the payload")]
    TrailingBytes { extra: u64 },

    #[error("metadata has {meta} rows but header declares {header}")]
    MetaCountMismatch { meta: usize, header: usize },

    #[error("metadata line {line}: {source}")]
    Metadata {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid store: {0}")]
    InvalidStore(String),

    #[error("item {item:?} has no {part} part")]
    MissingPart { item: String, part: Part },

    #[error("invalid score table: {0}")]
    InvalidScores(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("budget must be at least 1")]
    ZeroBudget,

    #[error("budget {budget} exceeds the {available} available items")]
    BudgetTooLarge { budget: usize, available: usize },

    #[error("row {row} has zero norm and cannot be normalized")]
    ZeroVector { row: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model {model:?} has no scores within the requested items")]
    AllMissing { model: String },

    #[error("correlation undefined: {0}")]
    Undefined(String),

    #[error("model set mismatch: {0}")]
    ModelSetMismatch(String),

    #[error("class set mismatch: {0}")]
    ClassMismatch(String),

    #[error("benchmark {benchmark:?} has {count} items, at least 2 are required")]
    TooFewItems { benchmark: String, count: usize },

    #[error("need at least 2 benchmarks (classes) to classify, found {found}")]
    TooFewClasses { found: usize },

    #[error("invalid world spec: {0}")]
    InvalidWorld(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
