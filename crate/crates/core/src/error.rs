use thiserror::Error;

pub type Result<T, E = MggError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MggError {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("backward seed must be a 1x1 scalar, got {rows}x{cols}")]
    NonScalarSeed { rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("checkpoint fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("training diverged at epoch {epoch}, video {video}: loss = {loss}")]
    Diverged { epoch: usize, video: String, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl MggError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        MggError::Shape { op, detail: detail.into() }
    }
}
