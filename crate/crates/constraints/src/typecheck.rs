//! Static checks of a constraint body against a metamodel: variables bound
//! before use, navigations over declared roles, comparisons over compatible
//! primitive types.

use std::collections::BTreeMap;

use evolvekit_core::{Literal, Metamodel, PrimType};

use crate::ast::{CmpOp, Coll, Expr, Term};
use crate::error::ConstraintError;

/// Typing context: bound variables with their static class.
pub struct TypeEnv<'a> {
    pub mm: &'a Metamodel,
    vars: BTreeMap<String, String>,
}

impl<'a> TypeEnv<'a> {
    pub fn new(mm: &'a Metamodel) -> Self {
        TypeEnv { mm, vars: BTreeMap::new() }
    }

    /// Environment with pre-bound free variables (e.g. `self` in rule
    /// conditions).
    pub fn with_vars(mm: &'a Metamodel, vars: &[(&str, &str)]) -> Self {
        TypeEnv {
            mm,
            vars: vars.iter().map(|(v, c)| (v.to_string(), c.to_string())).collect(),
        }
    }

    fn class_of(&self, var: &str) -> Option<&str> {
        self.vars.get(var).map(|s| s.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TermType {
    Object(String),
    Prim(PrimKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PrimKind {
    Str,
    Int,
    Float,
    Bool,
}

fn err(msg: String) -> ConstraintError {
    ConstraintError::Type { line: 0, col: 0, msg }
}

fn prim_kind(ty: &PrimType) -> PrimKind {
    match ty {
        PrimType::Str | PrimType::Enum(_) => PrimKind::Str,
        PrimType::Int => PrimKind::Int,
        PrimType::Float => PrimKind::Float,
        PrimType::Bool => PrimKind::Bool,
    }
}

/// Resolves the element class of a collection.
pub fn coll_class(coll: &Coll, env: &TypeEnv) -> Result<String, ConstraintError> {
    match coll {
        Coll::All(class) => {
            if env.mm.class(class).is_none() {
                return Err(err(format!("unknown class `{class}` in all(...)")));
            }
            Ok(class.clone())
        }
        Coll::Children { var, role } => {
            let class = env
                .class_of(var)
                .ok_or_else(|| err(format!("variable `{var}` is not bound")))?;
            let cont = env
                .mm
                .containment(class, role)
                .ok_or_else(|| err(format!("class `{class}` has no containment role `{role}`")))?;
            Ok(cont.child_class.clone())
        }
        Coll::Linked { var, assoc, role } => {
            let class = env
                .class_of(var)
                .ok_or_else(|| err(format!("variable `{var}` is not bound")))?;
            let a = env
                .mm
                .association(assoc)
                .ok_or_else(|| err(format!("unknown association `{assoc}`")))?;
            // `role` is the end the variable plays; the collection holds the
            // objects at the opposite end.
            if *role == a.src_role {
                if !env.mm.is_subtype(class, &a.src_class) {
                    return Err(err(format!(
                        "`{var}` of class `{class}` cannot play `{role}` in `{assoc}`"
                    )));
                }
                Ok(a.dst_class.clone())
            } else if *role == a.dst_role {
                if !env.mm.is_subtype(class, &a.dst_class) {
                    return Err(err(format!(
                        "`{var}` of class `{class}` cannot play `{role}` in `{assoc}`"
                    )));
                }
                Ok(a.src_class.clone())
            } else {
                Err(err(format!("association `{assoc}` has no end role `{role}`")))
            }
        }
    }
}

fn term_type(term: &Term, env: &TypeEnv) -> Result<TermType, ConstraintError> {
    match term {
        Term::Var(v) => env
            .class_of(v)
            .map(|c| TermType::Object(c.to_string()))
            .ok_or_else(|| err(format!("variable `{v}` is not bound"))),
        Term::Attr { var, attr } => {
            let class = env
                .class_of(var)
                .ok_or_else(|| err(format!("variable `{var}` is not bound")))?;
            let a = env
                .mm
                .attribute(class, attr)
                .ok_or_else(|| err(format!("class `{class}` has no attribute `{attr}`")))?;
            Ok(TermType::Prim(prim_kind(&a.ty)))
        }
        Term::Lit(l) => Ok(TermType::Prim(match l {
            Literal::Str(_) => PrimKind::Str,
            Literal::Int(_) => PrimKind::Int,
            Literal::Float(_) => PrimKind::Float,
            Literal::Bool(_) => PrimKind::Bool,
        })),
    }
}

fn numeric(k: PrimKind) -> bool {
    matches!(k, PrimKind::Int | PrimKind::Float)
}

/// Type-checks an expression under the environment.
pub fn check_expr(expr: &Expr, env: &TypeEnv) -> Result<(), ConstraintError> {
    match expr {
        Expr::Forall { var, coll, body } | Expr::Exists { var, coll, body } => {
            let class = coll_class(coll, env)?;
            if env.class_of(var).is_some() {
                return Err(err(format!("variable `{var}` shadows an outer binding")));
            }
            let mut inner = TypeEnv { mm: env.mm, vars: env.vars.clone() };
            inner.vars.insert(var.clone(), class);
            check_expr(body, &inner)
        }
        Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
            check_expr(a, env)?;
            check_expr(b, env)
        }
        Expr::Not(inner) => check_expr(inner, env),
        Expr::BoolLit(_) => Ok(()),
        Expr::SizeCompare { coll, .. } => coll_class(coll, env).map(|_| ()),
        Expr::Compare { left, op, right } => {
            let lt = term_type(left, env)?;
            let rt = term_type(right, env)?;
            match (&lt, &rt) {
                (TermType::Object(_), TermType::Object(_)) => {
                    if matches!(op, CmpOp::Eq | CmpOp::Ne) {
                        Ok(())
                    } else {
                        Err(err(format!("objects only support = and !=, not {op}")))
                    }
                }
                (TermType::Prim(a), TermType::Prim(b)) => {
                    let compatible = a == b || (numeric(*a) && numeric(*b));
                    if !compatible {
                        return Err(err(format!(
                            "cannot compare {left} ({a:?}) with {right} ({b:?})"
                        )));
                    }
                    let ordered = matches!(op, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge);
                    if ordered && !(numeric(*a) && numeric(*b)) {
                        return Err(err(format!("ordering {op} requires numeric operands")));
                    }
                    Ok(())
                }
                _ => Err(err(format!("cannot compare object term with value term: {left} {op} {right}"))),
            }
        }
    }
}
