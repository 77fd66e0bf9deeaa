//! Static delta checks that are advisory rather than fatal: classes the
//! delta forgets about and rule pairs whose conditions can overlap.

use serde::Serialize;

use evolvekit_core::Metamodel;

use crate::ast::MigrationSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LintCode {
    #[serde(rename = "UNMAPPED_CLASS")]
    UnmappedClass,
    #[serde(rename = "OVERLAPPING_CONDITIONS")]
    OverlappingConditions,
    #[serde(rename = "UNKNOWN_COMMAND_ATTR")]
    UnknownCommandAttr,
}

impl std::fmt::Display for LintCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LintCode::UnmappedClass => "UNMAPPED_CLASS",
            LintCode::OverlappingConditions => "OVERLAPPING_CONDITIONS",
            LintCode::UnknownCommandAttr => "UNKNOWN_COMMAND_ATTR",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LintEntry {
    pub code: LintCode,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LintReport {
    pub entries: Vec<LintEntry>,
}

impl LintReport {
    pub fn is_clean(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("{} {}: {}\n", e.code, e.subject, e.message));
        }
        out
    }
}

/// Lints a delta against its two metamodels. Reported are: source classes
/// with neither a rule nor a same-named target class, map-rule groups whose
/// conditions can overlap syntactically (two unconditional rules or two
/// rules with identical conditions), and commands writing attributes the
/// target class does not declare.
pub fn lint_delta(spec: &MigrationSpec, mm_src: &Metamodel, mm_dst: &Metamodel) -> LintReport {
    let mut entries = Vec::new();

    for class in mm_src.classes.iter().map(|c| c.name.as_str()) {
        let has_rule = spec.map_rules().any(|(_, r)| r.src_class == class);
        if !has_rule && mm_dst.class(class).is_none() {
            entries.push(LintEntry {
                code: LintCode::UnmappedClass,
                subject: class.to_string(),
                message: format!(
                    "class `{class}` has no rule and no same-named class in `{}` v{}; its instances will be dropped",
                    mm_dst.name, mm_dst.version
                ),
            });
        }
    }

    let mut classes: Vec<&str> = spec.map_rules().map(|(_, r)| r.src_class.as_str()).collect();
    classes.sort_unstable();
    classes.dedup();
    for class in classes {
        let group: Vec<_> = spec.map_rules().filter(|(_, r)| r.src_class == class).collect();
        let unconditional: Vec<usize> = group
            .iter()
            .filter(|(_, r)| r.condition.is_none() && !r.otherwise)
            .map(|(i, _)| *i)
            .collect();
        if unconditional.len() > 1 {
            entries.push(LintEntry {
                code: LintCode::OverlappingConditions,
                subject: class.to_string(),
                message: format!(
                    "rules {} are all unconditional; only the first can ever apply",
                    unconditional
                        .iter()
                        .map(|i| spec.rule_label(*i))
                        .collect::<Vec<_>>()
                        .join(" and ")
                ),
            });
        }
        for (ai, (i, a)) in group.iter().enumerate() {
            for (j, b) in group.iter().skip(ai + 1) {
                if let (Some(ca), Some(cb)) = (&a.condition, &b.condition) {
                    if ca == cb {
                        entries.push(LintEntry {
                            code: LintCode::OverlappingConditions,
                            subject: class.to_string(),
                            message: format!(
                                "{} and {} share the condition `{ca}`",
                                spec.rule_label(*i),
                                spec.rule_label(*j)
                            ),
                        });
                    }
                }
            }
        }
    }

    for (i, rule) in spec.map_rules() {
        if let Some(dst) = &rule.dst_class {
            for cmd in &rule.commands {
                if mm_dst.attribute(dst, &cmd.target_attr).is_none() {
                    entries.push(LintEntry {
                        code: LintCode::UnknownCommandAttr,
                        subject: dst.clone(),
                        message: format!(
                            "{} writes `{}`, not declared on `{dst}`",
                            spec.rule_label(i),
                            cmd.target_attr
                        ),
                    });
                }
            }
        }
    }
    for (i, rule) in spec.add_rules() {
        for cmd in &rule.commands {
            if mm_dst.attribute(&rule.new_class, &cmd.target_attr).is_none() {
                entries.push(LintEntry {
                    code: LintCode::UnknownCommandAttr,
                    subject: rule.new_class.clone(),
                    message: format!(
                        "{} writes `{}`, not declared on `{}`",
                        spec.rule_label(i),
                        cmd.target_attr,
                        rule.new_class
                    ),
                });
            }
        }
    }

    entries.sort_by(|a, b| a.subject.cmp(&b.subject).then_with(|| a.message.cmp(&b.message)));
    LintReport { entries }
}
