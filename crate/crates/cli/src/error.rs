use serde::Serialize;

/// Failure of a run, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Core(#[from] kinetic_apnn::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("check `{check}` failed: {detail}")]
    CheckFailed { check: String, detail: String },
}

pub type RunResult<T> = std::result::Result<T, RunError>;

impl RunError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Config { key: key.into(), message: message.into() }
    }

    pub fn is_config(&self) -> bool {
        match self {
            RunError::Config { .. } => true,
            RunError::Core(e) => e.is_config_error(),
            _ => false,
        }
    }

    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            2
        } else {
            1
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let kind = match self {
            _ if self.is_config() => "config",
            RunError::Io(_) => "io",
            RunError::CheckFailed { .. } => "check",
            _ => "numerical",
        };
        let key = match self {
            RunError::Config { key, .. } => Some(key.clone()),
            RunError::Core(kinetic_apnn::Error::Config { key, .. }) => Some(key.clone()),
            RunError::CheckFailed { check, .. } => Some(check.clone()),
            _ => None,
        };
        ErrorRecord { kind, key, message: self.to_string(), exit_code: self.exit_code() }
    }
}

/// Machine-readable description of a failed run.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub key: Option<String>,
    pub message: String,
    pub exit_code: i32,
}
