//! Constraint evaluation. Total: an atom over missing data is false, a
//! quantifier over an empty collection is vacuous (forall true, exists
//! false). Extents and navigations are materialized sorted by object id, so
//! evaluation order and counterexample order are deterministic.

use std::collections::BTreeMap;

use serde::Serialize;

use evolvekit_core::{Literal, MObject, Metamodel, Model};

use crate::ast::{CmpOp, Coll, ConstraintDef, Expr, Term};
use crate::report::SuiteReport;

/// One counterexample: values for the outermost universal prefix, in
/// binding order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub var: String,
    pub object: String,
}

impl Assignment {
    pub fn render(&self) -> String {
        self.bindings
            .iter()
            .map(|b| format!("{}={}", b.var, b.object))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalResult {
    pub constraint: String,
    pub description: String,
    pub phase: String,
    pub valid: bool,
    pub counterexamples: Vec<Assignment>,
}

pub(crate) struct EvalCtx<'a> {
    pub model: &'a Model,
    pub mm: &'a Metamodel,
}

type Env<'a> = BTreeMap<String, &'a MObject>;

impl<'a> EvalCtx<'a> {
    /// Extent of a class: instances of it or of a subtype, sorted by id.
    /// Objects whose class the metamodel does not know are excluded.
    fn extent(&self, class: &str) -> Vec<&'a MObject> {
        self.model
            .objects
            .iter()
            .filter(|o| {
                self.mm.class(&o.class_name).is_some()
                    && self.mm.is_subtype(&o.class_name, class)
            })
            .collect()
    }

    pub fn eval_coll(&self, coll: &Coll, env: &Env<'a>) -> Vec<&'a MObject> {
        let mut out: Vec<&'a MObject> = match coll {
            Coll::All(class) => self.extent(class),
            Coll::Children { var, role } => match env.get(var) {
                Some(obj) => obj
                    .children
                    .get(role)
                    .map(|ids| ids.iter().filter_map(|id| self.model.object(id)).collect())
                    .unwrap_or_default(),
                None => Vec::new(),
            },
            Coll::Linked { var, assoc, role } => {
                let Some(obj) = env.get(var) else { return Vec::new() };
                let Some(a) = self.mm.association(assoc) else { return Vec::new() };
                let mut objs = Vec::new();
                for link in &self.model.links {
                    if link.association != *assoc {
                        continue;
                    }
                    let other = if *role == a.src_role && link.src == obj.id {
                        &link.dst
                    } else if *role == a.dst_role && link.dst == obj.id {
                        &link.src
                    } else {
                        continue;
                    };
                    if let Some(o) = self.model.object(other) {
                        objs.push(o);
                    }
                }
                objs
            }
        };
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out.dedup_by(|a, b| a.id == b.id);
        out
    }

    fn eval_term(&self, term: &Term, env: &Env<'a>) -> Option<Value<'a>> {
        match term {
            Term::Var(v) => env.get(v).map(|o| Value::Object(&o.id)),
            Term::Attr { var, attr } => env
                .get(var)
                .and_then(|o| o.attributes.get(attr))
                .map(Value::Lit),
            Term::Lit(l) => Some(Value::Owned(l.clone())),
        }
    }

    pub fn eval(&self, expr: &Expr, env: &Env<'a>) -> bool {
        match expr {
            Expr::Forall { var, coll, body } => {
                self.eval_coll(coll, env).into_iter().all(|o| {
                    let mut inner = env.clone();
                    inner.insert(var.clone(), o);
                    self.eval(body, &inner)
                })
            }
            Expr::Exists { var, coll, body } => {
                self.eval_coll(coll, env).into_iter().any(|o| {
                    let mut inner = env.clone();
                    inner.insert(var.clone(), o);
                    self.eval(body, &inner)
                })
            }
            Expr::And(a, b) => self.eval(a, env) && self.eval(b, env),
            Expr::Or(a, b) => self.eval(a, env) || self.eval(b, env),
            Expr::Implies(a, b) => !self.eval(a, env) || self.eval(b, env),
            Expr::Not(inner) => !self.eval(inner, env),
            Expr::BoolLit(b) => *b,
            Expr::SizeCompare { coll, op, value } => {
                compare_ints(self.eval_coll(coll, env).len() as i64, *op, *value)
            }
            Expr::Compare { left, op, right } => {
                let (Some(l), Some(r)) = (self.eval_term(left, env), self.eval_term(right, env))
                else {
                    return false;
                };
                compare_values(&l, *op, &r)
            }
        }
    }
}

enum Value<'a> {
    Object(&'a str),
    Lit(&'a Literal),
    Owned(Literal),
}

impl Value<'_> {
    fn lit(&self) -> Option<&Literal> {
        match self {
            Value::Lit(l) => Some(l),
            Value::Owned(l) => Some(l),
            Value::Object(_) => None,
        }
    }
}

fn compare_ints(l: i64, op: CmpOp, r: i64) -> bool {
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Lt => l < r,
        CmpOp::Le => l <= r,
        CmpOp::Gt => l > r,
        CmpOp::Ge => l >= r,
    }
}

fn compare_values(l: &Value, op: CmpOp, r: &Value) -> bool {
    if let (Value::Object(a), Value::Object(b)) = (l, r) {
        return match op {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            _ => false,
        };
    }
    let (Some(a), Some(b)) = (l.lit(), r.lit()) else { return false };
    match (a, b) {
        (Literal::Int(x), Literal::Int(y)) => compare_ints(*x, op, *y),
        (Literal::Float(x), Literal::Float(y)) => compare_floats(*x, op, *y),
        (Literal::Int(x), Literal::Float(y)) => compare_floats(*x as f64, op, *y),
        (Literal::Float(x), Literal::Int(y)) => compare_floats(*x, op, *y as f64),
        (Literal::Str(x), Literal::Str(y)) => match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            _ => false,
        },
        (Literal::Bool(x), Literal::Bool(y)) => match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            _ => false,
        },
        _ => false,
    }
}

fn compare_floats(l: f64, op: CmpOp, r: f64) -> bool {
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Lt => l < r,
        CmpOp::Le => l <= r,
        CmpOp::Gt => l > r,
        CmpOp::Ge => l >= r,
    }
}

/// Evaluates a single expression under pre-bound objects. Used for rule
/// conditions in the migration DSL.
pub fn eval_expr(expr: &Expr, bound: &[(&str, &MObject)], model: &Model, mm: &Metamodel) -> bool {
    let ctx = EvalCtx { model, mm };
    let env: Env = bound.iter().map(|(v, o)| (v.to_string(), *o)).collect();
    ctx.eval(expr, &env)
}

/// Evaluates one constraint, collecting the unsatisfying assignments of its
/// outermost universal prefix. Constraints that do not start with a forall
/// report validity with no counterexamples.
pub fn evaluate_constraint(c: &ConstraintDef, model: &Model, mm: &Metamodel) -> EvalResult {
    let ctx = EvalCtx { model, mm };

    // Peel the maximal forall prefix.
    let mut prefix: Vec<(&str, &Coll)> = Vec::new();
    let mut residual = &c.body;
    while let Expr::Forall { var, coll, body } = residual {
        prefix.push((var, coll));
        residual = body;
    }

    let mut counterexamples = Vec::new();
    if prefix.is_empty() {
        let valid = ctx.eval(&c.body, &Env::new());
        return EvalResult {
            constraint: c.name.clone(),
            description: c.description.clone(),
            phase: c.phase.clone(),
            valid,
            counterexamples,
        };
    }

    fn enumerate<'a>(
        ctx: &EvalCtx<'a>,
        prefix: &[(&str, &Coll)],
        residual: &Expr,
        env: &mut Env<'a>,
        out: &mut Vec<Assignment>,
    ) {
        match prefix.split_first() {
            None => {
                if !ctx.eval(residual, env) {
                    out.push(Assignment {
                        bindings: env
                            .iter()
                            .map(|(v, o)| (v.clone(), o.id.clone()))
                            .collect::<Vec<_>>()
                            .into_iter()
                            .map(|(var, object)| Binding { var, object })
                            .collect(),
                    });
                }
            }
            Some(((var, coll), rest)) => {
                for obj in ctx.eval_coll(coll, env) {
                    env.insert(var.to_string(), obj);
                    enumerate(ctx, rest, residual, env, out);
                    env.remove(*var);
                }
            }
        }
    }

    // Bindings must render in prefix order, not BTreeMap order; rebuild each
    // assignment against the prefix.
    let mut raw = Vec::new();
    enumerate(&ctx, &prefix, residual, &mut Env::new(), &mut raw);
    for a in raw {
        let by_var: BTreeMap<&str, &str> = a
            .bindings
            .iter()
            .map(|b| (b.var.as_str(), b.object.as_str()))
            .collect();
        counterexamples.push(Assignment {
            bindings: prefix
                .iter()
                .map(|(v, _)| Binding {
                    var: v.to_string(),
                    object: by_var[*v].to_string(),
                })
                .collect(),
        });
    }

    EvalResult {
        constraint: c.name.clone(),
        description: c.description.clone(),
        phase: c.phase.clone(),
        valid: counterexamples.is_empty(),
        counterexamples,
    }
}

/// Evaluates a suite, optionally filtered to one phase. The report carries a
/// warning per object excluded because its class is unknown, so partially
/// conformant legacy models can still be checked.
pub fn evaluate_suite(
    suite: &[ConstraintDef],
    model: &Model,
    mm: &Metamodel,
    phase: Option<&str>,
) -> SuiteReport {
    let mut warnings = Vec::new();
    for o in &model.objects {
        if mm.class(&o.class_name).is_none() {
            warnings.push(format!(
                "object `{}` of unknown class `{}` excluded from all extents",
                o.id, o.class_name
            ));
        }
    }
    let results: Vec<EvalResult> = suite
        .iter()
        .filter(|c| phase.is_none_or(|p| c.phase == p))
        .map(|c| evaluate_constraint(c, model, mm))
        .collect();
    let valid = results.iter().all(|r| r.valid);
    SuiteReport { metamodel: mm.name.clone(), valid, warnings, results }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_constraints;
    use evolvekit_core::{load_metamodel, load_model};

    fn mm() -> Metamodel {
        load_metamodel(
            r#"{
              "name": "components", "version": "1",
              "classes": [
                {"name": "Component",
                 "attributes": [{"name": "name", "type": "string"}],
                 "containments": [{"role": "ports", "class": "Port"},
                                  {"role": "threads", "class": "Thread"}]},
                {"name": "Port",
                 "attributes": [{"name": "name", "type": "string", "required": true}]},
                {"name": "Thread",
                 "attributes": [{"name": "name", "type": "string", "required": true}]}
              ]
            }"#,
        )
        .unwrap()
    }

    fn dup_port_model() -> Model {
        load_model(
            r#"{
              "metamodel": "components", "metamodelVersion": "1",
              "roots": ["c1"],
              "objects": [
                {"id": "c1", "class": "Component", "attrs": {"name": "c1"},
                 "children": {"ports": ["x", "y"]}},
                {"id": "x", "class": "Port", "attrs": {"name": "a"}},
                {"id": "y", "class": "Port", "attrs": {"name": "a"}}
              ]
            }"#,
        )
        .unwrap()
    }

    const UNIQUE: &str = r#"metamodel components
constraint UniquePortNames "Port names unique per component" phase entry:
  forall c in all(Component) . forall p1 in c.ports . forall p2 in c.ports .
    (p1 = p2) or (p1.name != p2.name)
constraint ComponentHasThread "every Component must contain at least one Thread" phase exit:
  forall c in all(Component) . size(c.threads) >= 1
"#;

    #[test]
    fn non_universal_shapes_report_validity_without_counterexamples() {
        let mm = mm();
        let defs = parse_constraints(
            "metamodel components\nconstraint E \"some port\" phase entry: exists p in all(Port) . p.name = \"a\"",
            &mm,
        )
        .unwrap();
        let m = dup_port_model();
        let r = evaluate_constraint(&defs[0], &m, &mm);
        assert!(r.valid);
        assert!(r.counterexamples.is_empty());
        let empty = load_model(r#"{"metamodel":"components","metamodelVersion":"1"}"#).unwrap();
        let r = evaluate_constraint(&defs[0], &empty, &mm);
        assert!(!r.valid, "exists over an empty extent is false");
        assert!(r.counterexamples.is_empty(), "no universal prefix, no counterexamples");
    }

    #[test]
    fn vacuous_constraint_is_valid() {
        let mm = mm();
        let defs = parse_constraints(
            "metamodel components\nconstraint T \"always\" phase entry: forall p in all(Port) . true",
            &mm,
        )
        .unwrap();
        let m = load_model(r#"{"metamodel":"components","metamodelVersion":"1"}"#).unwrap();
        let r = evaluate_constraint(&defs[0], &m, &mm);
        assert!(r.valid);
        assert!(r.counterexamples.is_empty());
    }

    #[test]
    fn duplicate_port_names_yield_both_orderings() {
        let mm = mm();
        let defs = parse_constraints(UNIQUE, &mm).unwrap();
        let m = dup_port_model();
        let r = evaluate_constraint(&defs[0], &m, &mm);
        assert!(!r.valid);
        let rendered: Vec<String> = r.counterexamples.iter().map(|a| a.render()).collect();
        assert_eq!(rendered, vec!["c=c1 p1=x p2=y", "c=c1 p1=y p2=x"]);
    }

    #[test]
    fn component_without_thread_is_a_counterexample() {
        let mm = mm();
        let defs = parse_constraints(UNIQUE, &mm).unwrap();
        let m = dup_port_model();
        let r = evaluate_constraint(&defs[1], &m, &mm);
        assert!(!r.valid);
        assert_eq!(r.counterexamples.len(), 1);
        assert_eq!(r.counterexamples[0].render(), "c=c1");
    }

    #[test]
    fn phase_filter_selects_constraints() {
        let mm = mm();
        let defs = parse_constraints(UNIQUE, &mm).unwrap();
        let m = dup_port_model();
        let all = evaluate_suite(&defs, &m, &mm, None);
        assert_eq!(all.results.len(), 2);
        assert!(!all.valid);
        let entry = evaluate_suite(&defs, &m, &mm, Some("entry"));
        assert_eq!(entry.results.len(), 1);
        assert_eq!(entry.results[0].constraint, "UniquePortNames");
        let empty = evaluate_suite(&defs, &m, &mm, Some("nope"));
        assert!(empty.results.is_empty());
        assert!(empty.valid);
    }

    #[test]
    fn unknown_class_objects_are_excluded_with_warning() {
        let mm = mm();
        let defs = parse_constraints(
            "metamodel components\nconstraint N \"named\" phase entry: forall p in all(Port) . p.name != \"\"",
            &mm,
        )
        .unwrap();
        let m = load_model(
            r#"{
              "metamodel": "components", "metamodelVersion": "1",
              "roots": ["g", "p"],
              "objects": [
                {"id": "g", "class": "Ghost"},
                {"id": "p", "class": "Port", "attrs": {"name": "ok"}}
              ]
            }"#,
        )
        .unwrap();
        let report = evaluate_suite(&defs, &m, &mm, None);
        assert!(report.valid);
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("Ghost"));
    }

    #[test]
    fn complement_law_on_prefix_tuples() {
        // A tuple is a counterexample iff it satisfies the negated residual.
        let mm = mm();
        let defs = parse_constraints(UNIQUE, &mm).unwrap();
        let m = dup_port_model();
        let ctx = EvalCtx { model: &m, mm: &mm };
        let Expr::Forall { var: v_c, coll: coll_c, body } = &defs[0].body else { panic!() };
        let Expr::Forall { var: v1, coll: coll_1, body } = &**body else { panic!() };
        let Expr::Forall { var: v2, coll: coll_2, body: residual } = &**body else { panic!() };

        let r = evaluate_constraint(&defs[0], &m, &mm);
        let mut expected = Vec::new();
        for c in ctx.eval_coll(coll_c, &Env::new()) {
            let mut env = Env::new();
            env.insert(v_c.clone(), c);
            for p1 in ctx.eval_coll(coll_1, &env) {
                env.insert(v1.clone(), p1);
                for p2 in ctx.eval_coll(coll_2, &env) {
                    env.insert(v2.clone(), p2);
                    let negated = Expr::Not(residual.clone());
                    if ctx.eval(&negated, &env) {
                        expected.push(format!("{}={} {}={} {}={}", v_c, c.id, v1, p1.id, v2, p2.id));
                    }
                }
            }
        }
        let got: Vec<String> = r.counterexamples.iter().map(|a| a.render()).collect();
        assert_eq!(got, expected);
    }
}
