use std::path::{Path, PathBuf};

/// Errors from the command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Toml(Box<toml::de::Error>),
    #[error("{path}:{line}: {reason}")]
    Geometry {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Core(#[from] dkucb_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl SimError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.to_owned(),
            source,
        }
    }
}
