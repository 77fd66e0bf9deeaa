use thiserror::Error;

/// Errors raised while loading or validating metamodels and models.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("PARSE_ERROR: {0}")]
    Parse(String),
    #[error("METAMODEL_ILLFORMED: {0}")]
    MetamodelIllformed(String),
    #[error("MODEL_ILLFORMED: {0}")]
    ModelIllformed(String),
}

impl CoreError {
    pub fn code(&self) -> &'static str {
        match self {
            CoreError::Parse(_) => "PARSE_ERROR",
            CoreError::MetamodelIllformed(_) => "METAMODEL_ILLFORMED",
            CoreError::ModelIllformed(_) => "MODEL_ILLFORMED",
        }
    }
}
