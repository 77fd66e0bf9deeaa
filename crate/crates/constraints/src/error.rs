use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ConstraintError {
    #[error("PARSE_ERROR at {line}:{col}: {msg}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("TYPE_ERROR at {line}:{col}: {msg}")]
    Type { line: u32, col: u32, msg: String },
}

impl ConstraintError {
    pub fn code(&self) -> &'static str {
        match self {
            ConstraintError::Parse { .. } => "PARSE_ERROR",
            ConstraintError::Type { .. } => "TYPE_ERROR",
        }
    }
}
