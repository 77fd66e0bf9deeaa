use evolvekit_core::ConformanceReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MclError {
    #[error("PARSE_ERROR at {line}:{col}: {msg}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("TYPE_ERROR: {0}")]
    Type(String),
    #[error("MIGRATION_INCOMPLETE: source model does not conform to the source metamodel ({} violation(s))", report.violations.len())]
    SourceNotConformant { report: ConformanceReport },
    #[error("MIGRATION_INCOMPLETE: {msg}")]
    Incomplete { msg: String, report: Option<ConformanceReport> },
}

impl From<evolvekit_constraints::ConstraintError> for MclError {
    fn from(e: evolvekit_constraints::ConstraintError) -> Self {
        match e {
            evolvekit_constraints::ConstraintError::Parse { line, col, msg } => {
                MclError::Parse { line, col, msg }
            }
            evolvekit_constraints::ConstraintError::Type { msg, .. } => MclError::Type(msg),
        }
    }
}
