//! The rule-graph migrator itself.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use evolvekit_core::Metamodel;
use evolvekit_mcl::{CmdExpr, MclRule, MigrationSpec};

use crate::graph::{ClassRef, RuleGraph, Side};

#[derive(Debug, Error)]
pub enum UmmieError {
    #[error("RULEGRAPH_ILLFORMED: {0}")]
    Illformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WarningKind {
    #[serde(rename = "W_NULL_REF")]
    NullRef,
    #[serde(rename = "W_AMBIGUOUS_MAPPING")]
    AmbiguousMapping,
    #[serde(rename = "W_ADDITION_UNHANDLED")]
    AdditionUnhandled,
    #[serde(rename = "W_ATTR_REF_BROKEN")]
    AttrRefBroken,
}

impl std::fmt::Display for WarningKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WarningKind::NullRef => "W_NULL_REF",
            WarningKind::AmbiguousMapping => "W_AMBIGUOUS_MAPPING",
            WarningKind::AdditionUnhandled => "W_ADDITION_UNHANDLED",
            WarningKind::AttrRefBroken => "W_ATTR_REF_BROKEN",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WarningEntry {
    pub code: WarningKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct WarningReport {
    pub entries: Vec<WarningEntry>,
}

impl WarningReport {
    pub fn count(&self, kind: WarningKind) -> usize {
        self.entries.iter().filter(|e| e.code == kind).count()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{}{}{}: {}\n",
                e.code,
                e.rule.as_deref().map(|r| format!(" rule={r}")).unwrap_or_default(),
                e.node.as_deref().map(|n| format!(" node={n}")).unwrap_or_default(),
                e.message
            ));
        }
        if self.entries.is_empty() {
            out.push_str("no manual work required\n");
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// How the delta treats one source class.
enum ClassFate {
    Untouched,
    Deleted,
    Renamed { to: String, attr_renames: BTreeMap<String, String> },
    Ambiguous,
}

fn classify(spec: &MigrationSpec, class: &str) -> ClassFate {
    let rules: Vec<&evolvekit_mcl::MapRule> = spec
        .rules
        .iter()
        .filter_map(|r| match r {
            MclRule::Map(m) if m.src_class == class => Some(m),
            _ => None,
        })
        .collect();
    match rules.as_slice() {
        [] => ClassFate::Untouched,
        // A lone rule is effectively unconditional whether it is spelled
        // plain or `otherwise`; a lone conditional rule leaves some
        // instances unmapped, which only a human can resolve.
        [rule] if rule.condition.is_none() => match &rule.dst_class {
            None => ClassFate::Deleted,
            Some(to) => {
                let mut attr_renames = BTreeMap::new();
                for cmd in &rule.commands {
                    if let CmdExpr::SrcAttr(from) = &cmd.expr {
                        if *from != cmd.target_attr {
                            attr_renames.insert(from.clone(), cmd.target_attr.clone());
                        }
                    }
                }
                ClassFate::Renamed { to: to.clone(), attr_renames }
            }
        },
        _ => ClassFate::Ambiguous,
    }
}

/// Rewrites whole identifier tokens of `expr` according to the rename map.
fn rewrite_tokens(expr: &str, renames: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(expr.len());
    let chars: Vec<char> = expr.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let token: String = chars[start..i].iter().collect();
            match renames.get(&token) {
                Some(new) => out.push_str(new),
                None => out.push_str(&token),
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

fn validate(rg: &RuleGraph, mm_src: &Metamodel, mm_dst: &Metamodel) -> Result<(), UmmieError> {
    for rule in &rg.rules {
        let mut ids = std::collections::BTreeSet::new();
        for node in &rule.nodes {
            if !ids.insert(node.id.as_str()) {
                return Err(UmmieError::Illformed(format!(
                    "rule `{}` declares node `{}` twice",
                    rule.name, node.id
                )));
            }
            if let ClassRef::Class(c) = &node.class_ref {
                let mm = match node.side {
                    Side::Source => mm_src,
                    Side::Destination => mm_dst,
                };
                if mm.class(c).is_none() {
                    return Err(UmmieError::Illformed(format!(
                        "rule `{}` node `{}` references `{c}`, which is not in `{}`",
                        rule.name, node.id, mm.name
                    )));
                }
            }
        }
        for edge in &rule.edges {
            for end in [&edge.src, &edge.dst] {
                if !ids.contains(end.as_str()) {
                    return Err(UmmieError::Illformed(format!(
                        "rule `{}` has an edge to unknown node `{end}`",
                        rule.name
                    )));
                }
            }
        }
        for op in &rule.attr_ops {
            if !ids.contains(op.node.as_str()) {
                return Err(UmmieError::Illformed(format!(
                    "rule `{}` has an attrOp on unknown node `{}`",
                    rule.name, op.node
                )));
            }
        }
    }
    Ok(())
}

/// Patches a rule graph against the delta. Only nodes referencing the evolved
/// input metamodel change; a node's class reference is edited exactly when a
/// single unconditional rule covers its class, everything else is warned
/// about and left for the developer.
pub fn migrate_rules(
    rg: &RuleGraph,
    spec: &MigrationSpec,
    mm_src: &Metamodel,
    mm_evolved: &Metamodel,
    mm_dst: &Metamodel,
) -> Result<(RuleGraph, WarningReport), UmmieError> {
    validate(rg, mm_src, mm_dst)?;

    let mut out = rg.clone();
    let mut report = WarningReport::default();

    for rule in &mut out.rules {
        for node in &mut rule.nodes {
            if node.side == Side::Destination {
                continue;
            }
            let Some(class) = node.class_ref.name().map(String::from) else { continue };
            match classify(spec, &class) {
                ClassFate::Untouched => {}
                ClassFate::Deleted => {
                    node.class_ref = ClassRef::Null;
                    report.entries.push(WarningEntry {
                        code: WarningKind::NullRef,
                        rule: Some(rule.name.clone()),
                        node: Some(node.id.clone()),
                        message: format!(
                            "class `{class}` was deleted; the null reference must be resolved manually"
                        ),
                    });
                }
                ClassFate::Renamed { to, attr_renames } => {
                    node.class_ref = ClassRef::Class(to.clone());
                    for op in rule.attr_ops.iter_mut().filter(|op| op.node == node.id) {
                        if let Some(new) = attr_renames.get(&op.attr) {
                            op.attr = new.clone();
                        }
                        op.expr = rewrite_tokens(&op.expr, &attr_renames);
                        if mm_evolved.attribute(&to, &op.attr).is_none() {
                            report.entries.push(WarningEntry {
                                code: WarningKind::AttrRefBroken,
                                rule: Some(rule.name.clone()),
                                node: Some(node.id.clone()),
                                message: format!(
                                    "attrOp references `{}`, which `{to}` no longer declares",
                                    op.attr
                                ),
                            });
                        }
                    }
                }
                ClassFate::Ambiguous => {
                    report.entries.push(WarningEntry {
                        code: WarningKind::AmbiguousMapping,
                        rule: Some(rule.name.clone()),
                        node: Some(node.id.clone()),
                        message: format!(
                            "class `{class}` has multiple or conditional mappings; the mapping should be done manually"
                        ),
                    });
                }
            }
        }
    }

    for (i, add) in spec.add_rules() {
        report.entries.push(WarningEntry {
            code: WarningKind::AdditionUnhandled,
            rule: None,
            node: None,
            message: format!(
                "{} adds `{}`; additions are not handled, extend the transformation by hand",
                spec.rule_label(i),
                add.new_class
            ),
        });
    }

    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_rulegraph, Action, AttrOp, PatternNode, Rule};
    use evolvekit_core::load_metamodel;
    use evolvekit_mcl::parse_mcl;
    use std::fs;
    use std::path::PathBuf;

    fn corpus(rel: &str) -> String {
        let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel);
        fs::read_to_string(&p).unwrap()
    }

    fn metamodels() -> (Metamodel, Metamodel, Metamodel) {
        (
            load_metamodel(&corpus("portsplit/components-v1.mm.json")).unwrap(),
            load_metamodel(&corpus("portsplit/components-v2.mm.json")).unwrap(),
            load_metamodel(&corpus("rules/runtime.mm.json")).unwrap(),
        )
    }

    #[test]
    fn destination_only_rules_pass_through_unwarned() {
        let (v1, v2, dst) = metamodels();
        let spec = parse_mcl(&corpus("portsplit/port-split.mcl"), &v1, &v2).unwrap();
        let rg = RuleGraph {
            name: "g".into(),
            rules: vec![Rule {
                name: "r".into(),
                nodes: vec![PatternNode {
                    id: "n".into(),
                    side: Side::Destination,
                    class_ref: ClassRef::Class("Proc".into()),
                    action: Action::Create,
                }],
                edges: vec![],
                attr_ops: vec![],
            }],
        };
        let (out, report) = migrate_rules(&rg, &spec, &v1, &v2, &dst).unwrap();
        assert_eq!(out, rg);
        assert!(report.entries.is_empty());
    }

    #[test]
    fn split_class_nodes_are_flagged_for_manual_mapping() {
        let (v1, v2, dst) = metamodels();
        let spec = parse_mcl(&corpus("portsplit/port-split.mcl"), &v1, &v2).unwrap();
        let rg = load_rulegraph(&corpus("rules/interp.rules.json")).unwrap();
        let (out, report) = migrate_rules(&rg, &spec, &v1, &v2, &dst).unwrap();
        // The Port node is ambiguous (two rules); the Component node is
        // untouched. Nothing is edited.
        assert_eq!(out, rg);
        assert_eq!(report.count(WarningKind::AmbiguousMapping), 1);
        let w = &report.entries[0];
        assert_eq!(w.rule.as_deref(), Some("port-to-chan"));
        assert_eq!(w.node.as_deref(), Some("q"));
    }

    #[test]
    fn deleted_class_becomes_null_ref_with_warning() {
        let v1 = load_metamodel(&corpus("deletion/legacy-v1.mm.json")).unwrap();
        let v2 = load_metamodel(&corpus("deletion/legacy-v2.mm.json")).unwrap();
        let dst = load_metamodel(&corpus("rules/runtime.mm.json")).unwrap();
        let spec = parse_mcl(&corpus("deletion/delete.mcl"), &v1, &v2).unwrap();
        let rg = RuleGraph {
            name: "g".into(),
            rules: vec![Rule {
                name: "r".into(),
                nodes: vec![PatternNode {
                    id: "n1".into(),
                    side: Side::Source,
                    class_ref: ClassRef::Class("LegacyThing".into()),
                    action: Action::Match,
                }],
                edges: vec![],
                attr_ops: vec![],
            }],
        };
        let (out, report) = migrate_rules(&rg, &spec, &v1, &v2, &dst).unwrap();
        assert_eq!(out.rules[0].nodes[0].class_ref, ClassRef::Null);
        assert_eq!(report.count(WarningKind::NullRef), 1);
    }

    #[test]
    fn rename_rewrites_class_and_attr_ops_silently() {
        let v1 = load_metamodel(
            r#"{"name":"m","version":"1","classes":[
                {"name":"Old","attributes":[{"name":"alpha","type":"int"},
                                             {"name":"keep","type":"int"}]}]}"#,
        )
        .unwrap();
        let v2 = load_metamodel(
            r#"{"name":"m","version":"2","classes":[
                {"name":"New","attributes":[{"name":"beta","type":"int"},
                                             {"name":"keep","type":"int"}]}]}"#,
        )
        .unwrap();
        let dst = load_metamodel(&corpus("rules/runtime.mm.json")).unwrap();
        let spec = parse_mcl(
            "delta \"rn\" from m 1 to m 2\nmap Old => New with { beta := src.alpha }",
            &v1,
            &v2,
        )
        .unwrap();
        let rg = RuleGraph {
            name: "g".into(),
            rules: vec![Rule {
                name: "r".into(),
                nodes: vec![PatternNode {
                    id: "n1".into(),
                    side: Side::Source,
                    class_ref: ClassRef::Class("Old".into()),
                    action: Action::Match,
                }],
                edges: vec![],
                attr_ops: vec![
                    AttrOp { node: "n1".into(), attr: "alpha".into(), expr: "alpha + keep".into() },
                    AttrOp { node: "n1".into(), attr: "keep".into(), expr: "keep".into() },
                ],
            }],
        };
        let (out, report) = migrate_rules(&rg, &spec, &v1, &v2, &dst).unwrap();
        assert!(report.entries.is_empty(), "{}", report.render_text());
        let node = &out.rules[0].nodes[0];
        assert_eq!(node.class_ref, ClassRef::Class("New".into()));
        assert_eq!(out.rules[0].attr_ops[0].attr, "beta");
        assert_eq!(out.rules[0].attr_ops[0].expr, "beta + keep");
        assert_eq!(out.rules[0].attr_ops[1].attr, "keep");
    }

    #[test]
    fn broken_attr_reference_is_flagged() {
        let v1 = load_metamodel(
            r#"{"name":"m","version":"1","classes":[
                {"name":"Old","attributes":[{"name":"gone","type":"int"}]}]}"#,
        )
        .unwrap();
        let v2 = load_metamodel(
            r#"{"name":"m","version":"2","classes":[{"name":"New"}]}"#,
        )
        .unwrap();
        let dst = load_metamodel(&corpus("rules/runtime.mm.json")).unwrap();
        let spec = parse_mcl("delta \"rn\" from m 1 to m 2\nmap Old => New", &v1, &v2).unwrap();
        let rg = RuleGraph {
            name: "g".into(),
            rules: vec![Rule {
                name: "r".into(),
                nodes: vec![PatternNode {
                    id: "n1".into(),
                    side: Side::Source,
                    class_ref: ClassRef::Class("Old".into()),
                    action: Action::Match,
                }],
                edges: vec![],
                attr_ops: vec![AttrOp { node: "n1".into(), attr: "gone".into(), expr: "gone".into() }],
            }],
        };
        let (_, report) = migrate_rules(&rg, &spec, &v1, &v2, &dst).unwrap();
        assert_eq!(report.count(WarningKind::AttrRefBroken), 1);
    }

    #[test]
    fn additions_warn_once_each() {
        let v1 = load_metamodel(&corpus("threads/softarch-v1.mm.json")).unwrap();
        let v2 = load_metamodel(&corpus("threads/softarch-v2.mm.json")).unwrap();
        let dst = load_metamodel(&corpus("rules/runtime.mm.json")).unwrap();
        let spec = parse_mcl(&corpus("threads/thread-add.mcl"), &v1, &v2).unwrap();
        let rg = RuleGraph { name: "g".into(), rules: vec![] };
        let (_, report) = migrate_rules(&rg, &spec, &v1, &v2, &dst).unwrap();
        assert_eq!(report.count(WarningKind::AdditionUnhandled), 1);
        assert!(report.entries[0].message.contains("Thread"));
    }

    #[test]
    fn identity_migration_is_idempotent() {
        let (v1, v2, dst) = metamodels();
        let spec = parse_mcl(&corpus("portsplit/port-split.mcl"), &v1, &v2).unwrap();
        let rg = load_rulegraph(&corpus("rules/interp.rules.json")).unwrap();
        let (migrated, _) = migrate_rules(&rg, &spec, &v1, &v2, &dst).unwrap();
        let mut v2b = v2.clone();
        v2b.version = "3".into();
        let identity = parse_mcl("delta \"id\" from components 2 to components 3", &v2, &v2b).unwrap();
        let (again, report) = migrate_rules(&migrated, &identity, &v2, &v2b, &dst).unwrap();
        assert_eq!(again, migrated);
        assert!(report.entries.is_empty());
    }

    #[test]
    fn malformed_graphs_are_rejected() {
        let (v1, v2, dst) = metamodels();
        let spec = parse_mcl(&corpus("portsplit/port-split.mcl"), &v1, &v2).unwrap();
        let dup = RuleGraph {
            name: "g".into(),
            rules: vec![Rule {
                name: "r".into(),
                nodes: vec![
                    PatternNode {
                        id: "n".into(),
                        side: Side::Source,
                        class_ref: ClassRef::Class("Port".into()),
                        action: Action::Match,
                    },
                    PatternNode {
                        id: "n".into(),
                        side: Side::Source,
                        class_ref: ClassRef::Class("Port".into()),
                        action: Action::Match,
                    },
                ],
                edges: vec![],
                attr_ops: vec![],
            }],
        };
        assert!(migrate_rules(&dup, &spec, &v1, &v2, &dst).is_err());
    }
}
