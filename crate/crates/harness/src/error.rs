use std::path::{Path, PathBuf};

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Core(#[from] rotators_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown preset `{name}`; available: {}", available.join(", "))]
    UnknownPreset { name: String, available: Vec<String> },
    #[error("{0}")]
    Invalid(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config { .. } => "config",
            HarnessError::Core(rotators_core::Error::InvalidParameter { .. }) => "config",
            HarnessError::Core(_) => "simulation",
            HarnessError::Io { .. } => "io",
            HarnessError::UnknownPreset { .. } => "preset",
            HarnessError::Invalid(_) => "invalid",
        }
    }

    /// Config key responsible for the failure, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            HarnessError::Config { key, .. } => Some(key),
            HarnessError::Core(rotators_core::Error::InvalidParameter { name, .. }) => Some(name),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        if let Some(key) = self.key() {
            body["key"] = json!(key);
        }
        if let HarnessError::UnknownPreset { available, .. } = self {
            body["available"] = json!(available);
        }
        json!({ "error": body })
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "preset" | "invalid" => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
