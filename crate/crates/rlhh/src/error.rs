use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported format version: {0}")]
    Version(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("instance is infeasible: {0}")]
    Infeasible(String),

    #[error("checksum mismatch in {0}")]
    Checksum(String),

    #[error("model/problem mismatch: {0}")]
    ModelMismatch(String),

    #[error("LP solve failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
