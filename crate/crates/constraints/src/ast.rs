//! Constraint AST: quantified boolean expressions over class extents,
//! containment navigations and link navigations.

use evolvekit_core::Literal;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDef {
    pub name: String,
    pub description: String,
    pub phase: String,
    pub body: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl std::fmt::Display for CmpOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        })
    }
}

/// A collection to quantify or count over.
#[derive(Debug, Clone, PartialEq)]
pub enum Coll {
    /// `all(Class)`: extent of a class, subtypes included.
    All(String),
    /// `v.role`: children of `v` under a containment role.
    Children { var: String, role: String },
    /// `v.linked(assoc, endRole)`: objects at the opposite end of links in
    /// which `v` plays `endRole`.
    Linked { var: String, assoc: String, role: String },
}

impl std::fmt::Display for Coll {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coll::All(c) => write!(f, "all({c})"),
            Coll::Children { var, role } => write!(f, "{var}.{role}"),
            Coll::Linked { var, assoc, role } => write!(f, "{var}.linked({assoc}, {role})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// A bound object variable.
    Var(String),
    /// `v.attr`: attribute of a bound object.
    Attr { var: String, attr: String },
    Lit(Literal),
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Attr { var, attr } => write!(f, "{var}.{attr}"),
            Term::Lit(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Forall { var: String, coll: Coll, body: Box<Expr> },
    Exists { var: String, coll: Coll, body: Box<Expr> },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Compare { left: Term, op: CmpOp, right: Term },
    SizeCompare { coll: Coll, op: CmpOp, value: i64 },
    BoolLit(bool),
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expr::Forall { var, coll, body } => write!(f, "forall {var} in {coll} . {body}"),
            Expr::Exists { var, coll, body } => write!(f, "exists {var} in {coll} . {body}"),
            Expr::And(a, b) => write!(f, "({a} and {b})"),
            Expr::Or(a, b) => write!(f, "({a} or {b})"),
            Expr::Implies(a, b) => write!(f, "({a} implies {b})"),
            Expr::Not(e) => write!(f, "not {e}"),
            Expr::Compare { left, op, right } => write!(f, "{left} {op} {right}"),
            Expr::SizeCompare { coll, op, value } => write!(f, "size({coll}) {op} {value}"),
            Expr::BoolLit(b) => write!(f, "{b}"),
        }
    }
}

impl Expr {
    /// Free variables of the expression (variables used but not bound here).
    pub fn free_vars(&self) -> Vec<String> {
        fn walk(e: &Expr, bound: &mut Vec<String>, free: &mut Vec<String>) {
            let add = |v: &str, bound: &Vec<String>, free: &mut Vec<String>| {
                if !bound.iter().any(|b| b == v) && !free.iter().any(|f| f == v) {
                    free.push(v.to_string());
                }
            };
            let coll_vars = |c: &Coll, bound: &Vec<String>, free: &mut Vec<String>| match c {
                Coll::All(_) => {}
                Coll::Children { var, .. } | Coll::Linked { var, .. } => {
                    if !bound.iter().any(|b| b == var) && !free.iter().any(|f| f == var) {
                        free.push(var.clone());
                    }
                }
            };
            match e {
                Expr::Forall { var, coll, body } | Expr::Exists { var, coll, body } => {
                    coll_vars(coll, bound, free);
                    bound.push(var.clone());
                    walk(body, bound, free);
                    bound.pop();
                }
                Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
                    walk(a, bound, free);
                    walk(b, bound, free);
                }
                Expr::Not(inner) => walk(inner, bound, free),
                Expr::Compare { left, right, .. } => {
                    for t in [left, right] {
                        match t {
                            Term::Var(v) => add(v, bound, free),
                            Term::Attr { var, .. } => add(var, bound, free),
                            Term::Lit(_) => {}
                        }
                    }
                }
                Expr::SizeCompare { coll, .. } => coll_vars(coll, bound, free),
                Expr::BoolLit(_) => {}
            }
        }
        let mut free = Vec::new();
        walk(self, &mut Vec::new(), &mut free);
        free
    }
}
