//! The migration DSL and its interpreter.
//!
//! A delta file names the original and evolved metamodels and lists ordered
//! rules: class mappings (possibly conditional, possibly to the null class),
//! association renames, and additions. Executing a delta migrates a model so
//! that the output conforms to the evolved metamodel, with a full accounting
//! of where every source object went.

mod ast;
mod error;
mod lint;
mod migrate;
mod parse;

pub use ast::{AddRule, CmdExpr, Command, MapRule, MclRule, MigrationSpec};
pub use error::MclError;
pub use lint::{lint_delta, LintCode, LintEntry, LintReport};
pub use migrate::{migrate_model, MigrationReport, MigrationWarning, WarningCode};
pub use parse::parse_mcl;
