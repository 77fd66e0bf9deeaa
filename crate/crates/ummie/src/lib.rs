//! Rule-graph migration.
//!
//! Transformation rules are pattern graphs whose nodes reference classes of
//! the input metamodel (side `source`) or the output metamodel (side
//! `destination`). When the input metamodel evolves, the nodes referencing it
//! must be patched against the delta: untouched classes stay, deleted classes
//! become null references to resolve by hand, unambiguous renames are applied
//! automatically, and split classes are flagged for manual mapping. The
//! output metamodel is assumed not to evolve.

mod graph;
mod migrate;

pub use graph::{
    load_rulegraph, save_rulegraph, Action, AttrOp, ClassRef, PatternEdge, PatternNode, Rule,
    RuleGraph, Side,
};
pub use migrate::{migrate_rules, UmmieError, WarningEntry, WarningKind, WarningReport};
