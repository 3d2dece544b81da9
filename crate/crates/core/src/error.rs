use std::path::PathBuf;

/// Coarse classification of an [`Error`], used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Internal,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
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
    #[error("empty dataset")]
    EmptyDataset,
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("missing sidecar {0}")]
    MissingSidecar(PathBuf),
    #[error("label {label} is not binary (expected 0 or 1)")]
    NonBinaryLabel { label: String },
    #[error("class {0} has no instances")]
    EmptyClass(u8),
    #[error("window of {window} samples is longer than the signal ({len} samples)")]
    WindowTooLong { window: usize, len: usize },
    #[error("tone {freq_hz} Hz is at or above the Nyquist frequency {nyquist_hz} Hz")]
    AboveNyquist { freq_hz: f64, nyquist_hz: f64 },
    #[error("unknown wavelet '{0}'")]
    UnknownWavelet(String),
    #[error("{levels} decomposition levels requested, at most {max} allowed for length {len}")]
    TooManyLevels { levels: usize, max: usize, len: usize },
    #[error("class {class} has {count} instances, fewer than required ({required}) for {n_folds} folds")]
    InsufficientClass {
        class: u8,
        count: usize,
        required: usize,
        n_folds: usize,
    },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("column mismatch: model expects {expected} features, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("unknown feature id {0}")]
    UnknownFeature(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::UnknownWavelet(_) | Error::TooManyLevels { .. } => {
                ErrorKind::Config
            }
            Error::Invariant(_) => ErrorKind::Internal,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
