use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}, row {row}: {message}")]
    Manifest {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("duplicate id {0}")]
    DuplicateId(String),

    #[error("unknown phonation label `{0}`")]
    UnknownLabel(String),

    #[error("cannot read WAV {path}: {message}")]
    Wav { path: PathBuf, message: String },

    #[error("clip {0} is silent and cannot be normalized")]
    SilentClip(String),

    #[error("unsupported resampling {from} Hz -> {to} Hz (source rate must be >= target)")]
    UnsupportedRate { from: u32, to: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("signal too short: need {needed} {unit}, got {got}")]
    TooShort {
        needed: usize,
        got: usize,
        unit: &'static str,
    },

    #[error("feature store: {0}")]
    Store(String),

    #[error("feature store: truncated block for clip {clip}")]
    TruncatedBlock { clip: String },

    #[error("layer {layer} not present (model has layers 0..={max})")]
    MissingLayer { layer: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("training data must contain at least two classes")]
    SingleClass,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("cross-validation: {0}")]
    Fold(String),

    #[error("no feature for clips: {}", .0.join(", "))]
    MissingFeatures(Vec<String>),

    #[error("serialization: {0}")]
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
