use std::path::PathBuf;

use thiserror::Error;

use crate::pipeline::Stage;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("config error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: scaleglyph::Error,
    },

    #[error("catalog error in `{path}`: {reason}")]
    Catalog { path: PathBuf, reason: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("bad request: {0}")]
    BadRequest(String),

    #[error("io error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ServiceError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn catalog(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        ServiceError::Catalog {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    /// Process exit code: 2 for configuration problems, 10-16 for the
    /// pipeline stage that failed, 20 for serving errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            ServiceError::Config(_) => 2,
            ServiceError::Stage { stage, .. } => stage.exit_code(),
            _ => 20,
        }
    }
}

pub type Result<T> = std::result::Result<T, ServiceError>;
