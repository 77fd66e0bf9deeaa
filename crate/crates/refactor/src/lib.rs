//! Semantics-preserving refactorings over two built-in metamodels, shipped
//! as interchange files under `builtin/` at the repository root.
//!
//! Component networks: pushing a component down into a sibling container
//! (splitting channels that now cross the container boundary via fresh
//! boundary ports) and pulling it back up (merging pure relay pairs). The
//! behavioral oracle is leaf-to-leaf connectivity, which both refactorings
//! preserve exactly.
//!
//! Statecharts: flattening a hierarchical machine into an equivalent flat
//! one, with a trace-equivalence oracle (`simulate`).

mod components;
mod error;
mod statechart;

pub use components::{
    components_metamodel, flattened_connectivity, pull_up, push_down, Connectivity,
};
pub use error::RefactorError;
pub use statechart::{
    flat_statechart_metamodel, flatten_statechart, simulate, statechart_metamodel,
};
