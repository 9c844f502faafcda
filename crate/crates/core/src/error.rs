use thiserror::Error;

/// Configuration problems: either the document does not match the schema, or
/// a value violates one of the standing hypotheses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("schema violation{}: {message}", key.as_ref().map(|k| format!(" at `{k}`")).unwrap_or_default())]
    Schema { key: Option<String>, message: String },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Name of the offending key, when one can be identified.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Schema { key, .. } => key.as_deref(),
            ConfigError::Invalid { key, .. } => Some(key),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("integration diverged at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },
    #[error("time {t} is outside the trajectory range [0, {horizon}]")]
    Range { t: f64, horizon: f64 },
    #[error("spatial dimension {0} is not supported (only N = 1)")]
    UnsupportedDimension(usize),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("no spectral splitting: every computed root has nonnegative real part")]
    NoSplitting,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
