use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("support escapes target box: {0}")]
    SupportEscape(String),

    #[error("trajectory does not cover the requested horizon: {0}")]
    Coverage(String),

    #[error("integration aborted at step {step} (t = {time}): {reason}")]
    Aborted {
        step: usize,
        time: f64,
        reason: crate::integrator::AbortReason,
        partial: Box<crate::integrator::Integration>,
    },

    #[error("no (A2) certificate: {0}")]
    NoCertificate(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
