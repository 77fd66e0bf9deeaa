//! Parser and static checks for delta files.
//!
//! ```text
//! file   := "delta" STRING "from" IDENT VERSION "to" IDENT VERSION policy? rule*
//! policy := "policy" "identityForUnmapped" ("true" | "false")
//! rule   := "map" IDENT "=>" (IDENT | "null") ("when" expr | "otherwise")?
//!               ("reparent" IDENT)? block?
//!         | "map" "assoc" IDENT "=>" IDENT
//!         | "add" IDENT "in" IDENT ("when" expr)? block?
//! block  := "with" "{" (IDENT ":=" cmdexpr)* "}"
//! ```
//!
//! Conditions reuse the constraint expression grammar with `self` (map rules)
//! or `parent` (add rules) as the only free variable.

use evolvekit_constraints::{
    check_expr, parse_expr_embedded, ConstraintError, Expr, Lexer, TokKind, Token, TypeEnv,
};
use evolvekit_core::{Literal, Metamodel, PrimType};

use crate::ast::{AddRule, CmdExpr, Command, MapRule, MclRule, MigrationSpec};
use crate::error::MclError;

struct P<'t> {
    toks: &'t [Token],
    pos: usize,
}

impl<'t> P<'t> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, MclError> {
        let t = self.peek();
        Err(MclError::Parse { line: t.line, col: t.col, msg: msg.into() })
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), MclError> {
        if self.peek().is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found `{}`", self.peek().text))
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek().is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, MclError> {
        if self.peek().kind == TokKind::Ident {
            Ok(self.bump().text)
        } else {
            self.err(format!("expected {what}, found `{}`", self.peek().text))
        }
    }

    fn expect(&mut self, kind: TokKind, what: &str) -> Result<Token, MclError> {
        if self.peek().kind == kind {
            Ok(self.bump())
        } else {
            self.err(format!("expected {what}, found `{}`", self.peek().text))
        }
    }

    /// Versions may be bare identifiers, numbers, or strings.
    fn version(&mut self) -> Result<String, MclError> {
        match self.peek().kind {
            TokKind::Ident | TokKind::Int | TokKind::Float | TokKind::Str => {
                Ok(self.bump().text)
            }
            _ => self.err(format!("expected a version, found `{}`", self.peek().text)),
        }
    }

    fn embedded_expr(&mut self) -> Result<Expr, MclError> {
        let (expr, next) = parse_expr_embedded(self.toks, self.pos)?;
        self.pos = next;
        Ok(expr)
    }

    fn cmd_block(&mut self) -> Result<Vec<Command>, MclError> {
        let mut out = Vec::new();
        if !self.eat_kw("with") {
            return Ok(out);
        }
        self.expect(TokKind::LBrace, "`{`")?;
        while self.peek().kind != TokKind::RBrace {
            let target_attr = self.ident("an attribute name")?;
            self.expect(TokKind::Assign, "`:=`")?;
            let expr = self.cmd_expr()?;
            out.push(Command { target_attr, expr });
        }
        self.expect(TokKind::RBrace, "`}`")?;
        Ok(out)
    }

    fn cmd_expr(&mut self) -> Result<CmdExpr, MclError> {
        let mut lhs = self.cmd_atom()?;
        while self.peek().kind == TokKind::Plus {
            self.bump();
            let rhs = self.cmd_atom()?;
            lhs = CmdExpr::Add(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cmd_atom(&mut self) -> Result<CmdExpr, MclError> {
        match self.peek().kind {
            TokKind::Str => Ok(CmdExpr::Lit(Literal::Str(self.bump().text))),
            TokKind::Int => {
                let t = self.bump();
                let v = t.text.parse::<i64>().map_err(|_| MclError::Parse {
                    line: t.line,
                    col: t.col,
                    msg: format!("integer `{}` out of range", t.text),
                })?;
                Ok(CmdExpr::Lit(Literal::Int(v)))
            }
            TokKind::Float => {
                let t = self.bump();
                let v = t.text.parse::<f64>().map_err(|_| MclError::Parse {
                    line: t.line,
                    col: t.col,
                    msg: format!("float `{}` out of range", t.text),
                })?;
                Ok(CmdExpr::Lit(Literal::Float(v)))
            }
            TokKind::Ident if self.peek().is_kw("true") => {
                self.bump();
                Ok(CmdExpr::Lit(Literal::Bool(true)))
            }
            TokKind::Ident if self.peek().is_kw("false") => {
                self.bump();
                Ok(CmdExpr::Lit(Literal::Bool(false)))
            }
            TokKind::Ident if self.peek().is_kw("src") || self.peek().is_kw("parent") => {
                let base = self.bump().text;
                self.expect(TokKind::Dot, "`.`")?;
                let attr = self.ident("an attribute name")?;
                Ok(if base == "src" {
                    CmdExpr::SrcAttr(attr)
                } else {
                    CmdExpr::ParentAttr(attr)
                })
            }
            _ => self.err(format!(
                "expected a literal, `src.<attr>` or `parent.<attr>`, found `{}`",
                self.peek().text
            )),
        }
    }
}

/// Static type of a command expression, where `None` means "depends on the
/// runtime parent object" (map-rule parents are not statically classed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StaticTy {
    Str,
    Int,
    Float,
    Bool,
}

fn prim_static(ty: &PrimType) -> StaticTy {
    match ty {
        PrimType::Str | PrimType::Enum(_) => StaticTy::Str,
        PrimType::Int => StaticTy::Int,
        PrimType::Float => StaticTy::Float,
        PrimType::Bool => StaticTy::Bool,
    }
}

fn cmd_expr_type(
    e: &CmdExpr,
    src_class: Option<(&Metamodel, &str)>,
    parent_class: Option<(&Metamodel, &str)>,
    ctx: &str,
) -> Result<Option<StaticTy>, MclError> {
    match e {
        CmdExpr::Lit(Literal::Str(_)) => Ok(Some(StaticTy::Str)),
        CmdExpr::Lit(Literal::Int(_)) => Ok(Some(StaticTy::Int)),
        CmdExpr::Lit(Literal::Float(_)) => Ok(Some(StaticTy::Float)),
        CmdExpr::Lit(Literal::Bool(_)) => Ok(Some(StaticTy::Bool)),
        CmdExpr::SrcAttr(a) => match src_class {
            None => Err(MclError::Type(format!(
                "{ctx}: `src.{a}` is not available in an add rule"
            ))),
            Some((mm, class)) => mm
                .attribute(class, a)
                .map(|attr| Some(prim_static(&attr.ty)))
                .ok_or_else(|| {
                    MclError::Type(format!("{ctx}: class `{class}` has no attribute `{a}`"))
                }),
        },
        CmdExpr::ParentAttr(a) => match parent_class {
            // Map-rule parents are whatever contains the source object;
            // their attributes resolve at runtime.
            None => Ok(None),
            Some((mm, class)) => mm
                .attribute(class, a)
                .map(|attr| Some(prim_static(&attr.ty)))
                .ok_or_else(|| {
                    MclError::Type(format!("{ctx}: class `{class}` has no attribute `{a}`"))
                }),
        },
        CmdExpr::Add(l, r) => {
            let lt = cmd_expr_type(l, src_class, parent_class, ctx)?;
            let rt = cmd_expr_type(r, src_class, parent_class, ctx)?;
            match (lt, rt) {
                (None, _) | (_, None) => Ok(None),
                (Some(StaticTy::Str), Some(_)) | (Some(_), Some(StaticTy::Str)) => {
                    Ok(Some(StaticTy::Str))
                }
                (Some(StaticTy::Int), Some(StaticTy::Int)) => Ok(Some(StaticTy::Int)),
                (Some(StaticTy::Int), Some(StaticTy::Float))
                | (Some(StaticTy::Float), Some(StaticTy::Int))
                | (Some(StaticTy::Float), Some(StaticTy::Float)) => Ok(Some(StaticTy::Float)),
                (Some(StaticTy::Bool), _) | (_, Some(StaticTy::Bool)) => {
                    Err(MclError::Type(format!("{ctx}: `+` does not apply to bool operands")))
                }
            }
        }
    }
}

fn check_commands(
    commands: &[Command],
    target_class: &str,
    mm_dst: &Metamodel,
    src_class: Option<(&Metamodel, &str)>,
    parent_class: Option<(&Metamodel, &str)>,
    ctx: &str,
) -> Result<(), MclError> {
    for cmd in commands {
        let attr = mm_dst.attribute(target_class, &cmd.target_attr).ok_or_else(|| {
            MclError::Type(format!(
                "{ctx}: command writes `{}`, which is not declared on `{target_class}`",
                cmd.target_attr
            ))
        })?;
        if let Some(ty) = cmd_expr_type(&cmd.expr, src_class, parent_class, ctx)? {
            let want = prim_static(&attr.ty);
            if ty != want {
                return Err(MclError::Type(format!(
                    "{ctx}: command `{} := {}` has type {ty:?}, attribute expects {want:?}",
                    cmd.target_attr, cmd.expr
                )));
            }
        }
    }
    Ok(())
}

fn check_condition(
    expr: &Expr,
    var: &str,
    class: &str,
    mm: &Metamodel,
    ctx: &str,
) -> Result<(), MclError> {
    let env = TypeEnv::with_vars(mm, &[(var, class)]);
    check_expr(expr, &env).map_err(|e| match e {
        ConstraintError::Type { msg, .. } => MclError::Type(format!("{ctx}: {msg}")),
        other => other.into(),
    })?;
    for free in expr.free_vars() {
        if free != var {
            return Err(MclError::Type(format!(
                "{ctx}: condition uses `{free}`; only `{var}` is bound"
            )));
        }
    }
    Ok(())
}

/// Resolves the single containment role on `container` (in `mm`) that can
/// hold `child`. Ambiguity and absence are both rejected.
pub(crate) fn addition_role(
    mm: &Metamodel,
    container: &str,
    child: &str,
) -> Result<String, MclError> {
    let roles: Vec<&str> = mm
        .all_containments(container)
        .into_iter()
        .filter(|c| mm.is_subtype(child, &c.child_class))
        .map(|c| c.role.as_str())
        .collect();
    match roles.as_slice() {
        [one] => Ok(one.to_string()),
        [] => Err(MclError::Type(format!(
            "class `{container}` has no containment role for `{child}`"
        ))),
        many => Err(MclError::Type(format!(
            "class `{container}` has {} containment roles for `{child}` ({}); addition is ambiguous",
            many.len(),
            many.join(", ")
        ))),
    }
}

/// Parses a delta document and type-checks it against the two metamodels.
pub fn parse_mcl(
    text: &str,
    mm_src: &Metamodel,
    mm_dst: &Metamodel,
) -> Result<MigrationSpec, MclError> {
    let toks = Lexer::tokenize(text)?;
    let mut p = P { toks: &toks, pos: 0 };

    p.expect_kw("delta")?;
    let name = p.expect(TokKind::Str, "a delta name string")?.text;
    p.expect_kw("from")?;
    let src = (p.ident("the source metamodel name")?, p.version()?);
    p.expect_kw("to")?;
    let dst = (p.ident("the target metamodel name")?, p.version()?);

    for ((got_name, got_ver), mm, side) in
        [(&src, mm_src, "source"), (&dst, mm_dst, "target")]
    {
        if *got_name != mm.name || *got_ver != mm.version {
            return Err(MclError::Type(format!(
                "delta declares {side} metamodel `{got_name}` v{got_ver}, got `{}` v{}",
                mm.name, mm.version
            )));
        }
    }

    let mut identity_for_unmapped = true;
    if p.eat_kw("policy") {
        p.expect_kw("identityForUnmapped")?;
        let v = p.ident("true or false")?;
        identity_for_unmapped = match v.as_str() {
            "true" => true,
            "false" => false,
            other => return p.err(format!("expected true or false, found `{other}`")),
        };
    }

    let mut rules: Vec<MclRule> = Vec::new();
    while p.peek().kind != TokKind::Eof {
        if p.eat_kw("map") {
            if p.eat_kw("assoc") {
                let a_src = p.ident("an association name")?;
                p.expect(TokKind::Arrow, "`=>`")?;
                let a_dst = p.ident("an association name")?;
                if mm_src.association(&a_src).is_none() {
                    return Err(MclError::Type(format!(
                        "association `{a_src}` is not in `{}`",
                        mm_src.name
                    )));
                }
                if mm_dst.association(&a_dst).is_none() {
                    return Err(MclError::Type(format!(
                        "association `{a_dst}` is not in `{}`",
                        mm_dst.name
                    )));
                }
                rules.push(MclRule::MapAssoc { src: a_src, dst: a_dst });
                continue;
            }
            let src_class = p.ident("a class name")?;
            if mm_src.class(&src_class).is_none() {
                return Err(MclError::Type(format!(
                    "class `{src_class}` is not in `{}`",
                    mm_src.name
                )));
            }
            p.expect(TokKind::Arrow, "`=>`")?;
            let dst_class = if p.eat_kw("null") {
                None
            } else {
                let c = p.ident("a class name or `null`")?;
                if mm_dst.class(&c).is_none() {
                    return Err(MclError::Type(format!(
                        "class `{c}` is not in `{}`",
                        mm_dst.name
                    )));
                }
                Some(c)
            };
            let mut condition = None;
            let mut otherwise = false;
            if p.eat_kw("when") {
                let e = p.embedded_expr()?;
                check_condition(&e, "self", &src_class, mm_src, &format!("map {src_class}"))?;
                condition = Some(e);
            } else if p.eat_kw("otherwise") {
                otherwise = true;
            }
            let reparent = if p.eat_kw("reparent") {
                let anc = p.ident("an ancestor class name")?;
                if mm_src.class(&anc).is_none() {
                    return Err(MclError::Type(format!(
                        "reparent class `{anc}` is not in `{}`",
                        mm_src.name
                    )));
                }
                Some(anc)
            } else {
                None
            };
            let commands = p.cmd_block()?;
            match &dst_class {
                None => {
                    if !commands.is_empty() {
                        return Err(MclError::Type(format!(
                            "map {src_class} => null cannot carry commands"
                        )));
                    }
                }
                Some(d) => {
                    check_commands(
                        &commands,
                        d,
                        mm_dst,
                        Some((mm_src, src_class.as_str())),
                        None,
                        &format!("map {src_class} => {d}"),
                    )?;
                }
            }
            rules.push(MclRule::Map(MapRule {
                src_class,
                dst_class,
                condition,
                otherwise,
                reparent,
                commands,
            }));
        } else if p.eat_kw("add") {
            let new_class = p.ident("a class name")?;
            if mm_dst.class(&new_class).is_none() {
                return Err(MclError::Type(format!(
                    "class `{new_class}` is not in `{}`",
                    mm_dst.name
                )));
            }
            p.expect_kw("in")?;
            let container_class = p.ident("a container class name")?;
            if mm_dst.class(&container_class).is_none() {
                return Err(MclError::Type(format!(
                    "container class `{container_class}` is not in `{}`",
                    mm_dst.name
                )));
            }
            addition_role(mm_dst, &container_class, &new_class)?;
            let condition = if p.eat_kw("when") {
                let e = p.embedded_expr()?;
                check_condition(
                    &e,
                    "parent",
                    &container_class,
                    mm_dst,
                    &format!("add {new_class} in {container_class}"),
                )?;
                Some(e)
            } else {
                None
            };
            let commands = p.cmd_block()?;
            check_commands(
                &commands,
                &new_class,
                mm_dst,
                None,
                Some((mm_dst, container_class.as_str())),
                &format!("add {new_class} in {container_class}"),
            )?;
            rules.push(MclRule::Add(AddRule { new_class, container_class, condition, commands }));
        } else {
            return p.err(format!("expected `map` or `add`, found `{}`", p.peek().text));
        }
    }

    let spec = MigrationSpec { name, src, dst, rules, identity_for_unmapped };

    // At most one otherwise rule per source class.
    let mut seen_otherwise: Vec<&str> = Vec::new();
    for (_, rule) in spec.map_rules() {
        if rule.otherwise {
            if seen_otherwise.contains(&rule.src_class.as_str()) {
                return Err(MclError::Type(format!(
                    "class `{}` has more than one otherwise rule",
                    rule.src_class
                )));
            }
            seen_otherwise.push(&rule.src_class);
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use evolvekit_core::load_metamodel;
    use std::fs;
    use std::path::PathBuf;

    fn corpus(rel: &str) -> String {
        let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel);
        fs::read_to_string(&p).unwrap_or_else(|e| panic!("read {}: {e}", p.display()))
    }

    fn legacy() -> (Metamodel, Metamodel) {
        (
            load_metamodel(&corpus("deletion/legacy-v1.mm.json")).unwrap(),
            load_metamodel(&corpus("deletion/legacy-v2.mm.json")).unwrap(),
        )
    }

    #[test]
    fn null_mapping_parses_as_delete() {
        let (v1, v2) = legacy();
        let spec = parse_mcl(&corpus("deletion/delete.mcl"), &v1, &v2).unwrap();
        assert_eq!(spec.rules.len(), 2);
        match &spec.rules[0] {
            MclRule::Map(m) => {
                assert_eq!(m.src_class, "LegacyThing");
                assert!(m.dst_class.is_none());
            }
            other => panic!("unexpected rule {other}"),
        }
    }

    #[test]
    fn addition_rule_parses_with_command() {
        let v1 = load_metamodel(&corpus("threads/softarch-v1.mm.json")).unwrap();
        let v2 = load_metamodel(&corpus("threads/softarch-v2.mm.json")).unwrap();
        let spec = parse_mcl(&corpus("threads/thread-add.mcl"), &v1, &v2).unwrap();
        assert_eq!(spec.rules.len(), 1);
        match &spec.rules[0] {
            MclRule::Add(a) => {
                assert_eq!(a.new_class, "Thread");
                assert_eq!(a.container_class, "Component");
                assert_eq!(a.commands.len(), 1);
                assert_eq!(a.commands[0].target_attr, "name");
            }
            other => panic!("unexpected rule {other}"),
        }
    }

    #[test]
    fn split_with_otherwise_parses_in_order() {
        let v1 = load_metamodel(&corpus("portsplit/components-v1.mm.json")).unwrap();
        let v2 = load_metamodel(&corpus("portsplit/components-v2.mm.json")).unwrap();
        let spec = parse_mcl(&corpus("portsplit/port-split.mcl"), &v1, &v2).unwrap();
        let rules: Vec<&MapRule> = spec.map_rules().map(|(_, r)| r).collect();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].dst_class.as_deref(), Some("OutPort"));
        assert!(rules[0].condition.is_some());
        assert!(!rules[0].otherwise);
        assert_eq!(rules[1].dst_class.as_deref(), Some("InPort"));
        assert!(rules[1].otherwise);
    }

    #[test]
    fn unknown_classes_and_attrs_are_type_errors() {
        let (v1, v2) = legacy();
        for bad in [
            "delta \"x\" from legacy 1 to legacy 2\nmap Nope => null",
            "delta \"x\" from legacy 1 to legacy 2\nmap System => Ghost",
            "delta \"x\" from legacy 1 to legacy 2\nmap System => System with { bogus := \"v\" }",
            "delta \"x\" from legacy 1 to legacy 2\nmap System => System with { name := src.nope }",
            "delta \"x\" from legacy 1 to legacy 2\nmap System => System when self.bogus = 1",
        ] {
            let err = parse_mcl(bad, &v1, &v2).unwrap_err();
            assert!(matches!(err, MclError::Type(_)), "{bad}: {err}");
        }
    }

    #[test]
    fn header_mismatch_is_a_type_error() {
        let (v1, v2) = legacy();
        let err = parse_mcl("delta \"x\" from other 1 to legacy 2", &v1, &v2).unwrap_err();
        assert!(matches!(err, MclError::Type(_)));
    }

    #[test]
    fn duplicate_otherwise_is_rejected() {
        let v1 = load_metamodel(&corpus("portsplit/components-v1.mm.json")).unwrap();
        let v2 = load_metamodel(&corpus("portsplit/components-v2.mm.json")).unwrap();
        let text = "delta \"x\" from components 1 to components 2\n\
                    map Port => InPort otherwise\nmap Port => OutPort otherwise";
        assert!(matches!(parse_mcl(text, &v1, &v2), Err(MclError::Type(_))));
    }

    #[test]
    fn command_type_mismatch_is_rejected() {
        let (v1, v2) = legacy();
        let text = "delta \"x\" from legacy 1 to legacy 2\n\
                    map System => System with { name := 5 }";
        assert!(matches!(parse_mcl(text, &v1, &v2), Err(MclError::Type(_))));
    }

    #[test]
    fn policy_flag_is_parsed() {
        let (v1, v2) = legacy();
        let spec = parse_mcl(
            "delta \"x\" from legacy 1 to legacy 2\npolicy identityForUnmapped false",
            &v1,
            &v2,
        )
        .unwrap();
        assert!(!spec.identity_for_unmapped);
    }
}
