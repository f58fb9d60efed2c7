use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },

    #[error("manifest {path}, row {row}: {msg}")]
    ManifestRow {
        path: PathBuf,
        row: usize,
        msg: String,
    },

    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("truncated or corrupt audio file: {0}")]
    TruncatedAudio(String),

    #[error("unsupported sample rate {got} Hz (expected {expected} Hz)")]
    SampleRate { got: u32, expected: u32 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("signal too short: {0}")]
    TooShort(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unvoiced frame")]
    Unvoiced,

    #[error("too few pitch periods: need {needed}, found {found}")]
    TooFewPeriods { needed: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown architecture `{0}` (expected CA01, CA02 or CA03)")]
    UnknownArch(String),

    #[error("unknown feature id `{got}`; valid ids: {valid}")]
    UnknownFeature { got: String, valid: String },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("model file version {got} not supported (expected {expected})")]
    ModelVersion { got: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
