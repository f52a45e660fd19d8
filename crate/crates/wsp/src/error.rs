use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, WspError>;

#[derive(Debug, thiserror::Error)]
pub enum WspError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed FLD1 data at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error(transparent)]
    Core(#[from] wsp_core::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl WspError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WspError::Io {
            path: path.into(),
            source,
        }
    }
}
