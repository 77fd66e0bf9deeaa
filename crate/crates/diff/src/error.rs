use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum DiffError {
    #[error("METAMODEL_MISMATCH: models instantiate `{left}` and `{right}`")]
    MetamodelMismatch { left: String, right: String },
    #[error("invalid match configuration: {0}")]
    BadConfig(String),
}
