//! Model versioning support: similarity-based matching of two models via
//! fixed-point iteration, structural diffs over a matching, and three-way
//! merge with conflict reporting.

mod diff;
mod error;
mod matcher;
mod merge;

pub use diff::{diff_models, render_diff, AttrChange, DiffReport, Move};
pub use error::DiffError;
pub use matcher::{attr_similarity, match_models, MatchConfig, MatchPair, Matching};
pub use merge::{merge3, render_merge, Conflict, ConflictKind, MergeResult};

/// Output format shared by the report renderers in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}
