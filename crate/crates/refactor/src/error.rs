use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum RefactorError {
    #[error("ID_UNKNOWN: `{0}` is not a component in the model")]
    IdUnknown(String),
    #[error("NOT_SIBLINGS: `{0}` and `{1}` do not share a parent")]
    NotSiblings(String, String),
    #[error("AT_ROOT: `{0}` is not a subcomponent of a non-root container")]
    AtRoot(String),
    #[error("ILLFORMED_STATECHART: {0}")]
    IllformedStatechart(String),
    #[error("NONDETERMINISTIC: state `{state}` enables {count} transitions on `{event}`")]
    Nondeterministic { state: String, event: String, count: usize },
}
