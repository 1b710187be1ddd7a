use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("preparation error: truncation of mode {mode} is {have}, need at least {need}")]
    Preparation { mode: usize, have: usize, need: usize },
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("invalid config: {}", .keys.join(", "))]
    Config { keys: Vec<String> },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DynamoError>;
