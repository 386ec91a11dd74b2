use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic at byte offset {offset}: expected \"RTSTACK1\", found {found:?}")]
    BadMagic { offset: u64, found: String },

    #[error("header parse error at byte offset {offset}: {message}")]
    HeaderParse { offset: u64, message: String },

    #[error("truncated body at byte offset {offset}: expected {expected} bytes, found {found}")]
    TruncatedBody {
        offset: u64,
        expected: u64,
        found: u64,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("ragged row at line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("duplicate tile_id {0:?}")]
    DuplicateTileId(String),

    #[error("duplicate feature name {0:?}")]
    DuplicateFeature(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("band {0:?} not present")]
    MissingBand(String),

    #[error("missing required stack: {0}")]
    MissingStack(String),

    #[error("observation window spans {months} calendar months, need {required}")]
    WindowSpan { months: i32, required: &'static str },

    #[error("unknown wavelet filter {0:?} (supported: haar, db4, dmey)")]
    UnknownFilter(String),

    #[error("unknown variant {0:?}")]
    UnknownVariant(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("expected a single-band stack, found {0} bands")]
    NotSingleBand(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("total sum of squares is zero (constant target)")]
    ZeroVariance,

    #[error("ridge system is singular or ill-conditioned (residual {residual:.3e})")]
    Singular { residual: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("all {0} tiles were dropped during dataset assembly")]
    AllDropped(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
