use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("range error: {0}")]
    Range(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("orchestration error: {0}")]
    Orchestration(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("ingestion error: {0}")]
    Ingestion(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input or configuration rather than a bug.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Integrity(_) | Error::Orchestration(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
