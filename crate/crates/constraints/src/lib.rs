//! Well-formedness constraints as predicate-logic conditions over a model,
//! with the classes and associations of the metamodel as first-class
//! citizens. Evaluating a constraint returns its validity together with the
//! counterexample assignments of its universally quantified prefix.

pub mod ast;
mod error;
mod eval;
mod lex;
mod parse;
mod report;
mod typecheck;

pub use ast::{CmpOp, Coll, ConstraintDef, Expr, Term};
pub use error::ConstraintError;
pub use eval::{evaluate_constraint, evaluate_suite, eval_expr, Assignment, Binding, EvalResult};
pub use lex::{Lexer, TokKind, Token};
pub use parse::{parse_constraints, parse_expr_embedded};
pub use report::{render_report, ReportFormat, SuiteReport};
pub use typecheck::{check_expr, TypeEnv};
