//! Delta execution: three deterministic passes over the source model.
//!
//! P1 maps objects in containment pre-order (siblings by id). The first rule
//! whose condition holds wins, with `otherwise` rules tried last; images keep
//! their source ids. A null mapping drops the whole subtree unless a
//! descendant's own rule says `reparent`, which re-anchors that descendant
//! under the image of its nearest ancestor of the named class. P2 carries a
//! link over when both endpoint images exist and the (possibly renamed)
//! association admits their classes. P3 creates one child per addition rule
//! on every container image whose condition held against the post-P1 state.
//!
//! The output must conform to the evolved metamodel, otherwise migration
//! fails with the conformance report attached.

use std::collections::BTreeMap;

use serde::Serialize;

use evolvekit_constraints::eval_expr;
use evolvekit_core::{
    check_conformance, Literal, MLink, MObject, Metamodel, Model,
};

use crate::ast::{CmdExpr, Command, MigrationSpec};
use crate::error::MclError;
use crate::lint::{lint_delta, LintCode};
use crate::parse::addition_role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum WarningCode {
    #[serde(rename = "OVERLAPPING_CONDITIONS")]
    OverlappingConditions,
    #[serde(rename = "UNMAPPED_CLASS")]
    UnmappedClass,
    #[serde(rename = "ATTR_DROPPED")]
    AttrDropped,
    #[serde(rename = "DEFAULT_FILLED")]
    DefaultFilled,
}

impl std::fmt::Display for WarningCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WarningCode::OverlappingConditions => "OVERLAPPING_CONDITIONS",
            WarningCode::UnmappedClass => "UNMAPPED_CLASS",
            WarningCode::AttrDropped => "ATTR_DROPPED",
            WarningCode::DefaultFilled => "DEFAULT_FILLED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MigrationWarning {
    pub code: WarningCode,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RuleCount {
    pub rule: String,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DroppedEntry {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MigrationReport {
    /// Images produced per map rule, in rule order (delete rules stay at 0;
    /// their objects appear under `dropped`).
    pub mapped: Vec<RuleCount>,
    /// Objects carried over unchanged because no rule applied and the target
    /// metamodel has a same-named class.
    pub identity_carried: u64,
    pub dropped: Vec<DroppedEntry>,
    pub dropped_links: Vec<DroppedEntry>,
    pub added_objects: Vec<String>,
    pub warnings: Vec<MigrationWarning>,
}

impl MigrationReport {
    /// Every source object is mapped, identity-carried, or dropped.
    pub fn accounts_for(&self, source_objects: usize) -> bool {
        let mapped: u64 = self.mapped.iter().map(|r| r.count).sum();
        mapped + self.identity_carried + self.dropped.len() as u64 == source_objects as u64
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for rc in &self.mapped {
            out.push_str(&format!("rule {}: {} object(s)\n", rc.rule, rc.count));
        }
        out.push_str(&format!("identity-carried: {}\n", self.identity_carried));
        for d in &self.dropped {
            out.push_str(&format!("dropped {}: {}\n", d.id, d.reason));
        }
        for d in &self.dropped_links {
            out.push_str(&format!("dropped link {}: {}\n", d.id, d.reason));
        }
        for a in &self.added_objects {
            out.push_str(&format!("added {a}\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning {} {}: {}\n", w.code, w.subject, w.message));
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
enum Fate {
    Image,
    Dropped,
}

fn incomplete(msg: String) -> MclError {
    MclError::Incomplete { msg, report: None }
}

/// Evaluates a command expression. `None` means a referenced attribute was
/// unset, in which case the command is skipped and later stages may still
/// fill the target.
fn eval_cmd(
    expr: &CmdExpr,
    src: Option<&MObject>,
    parent: Option<&MObject>,
) -> Result<Option<Literal>, MclError> {
    Ok(match expr {
        CmdExpr::Lit(l) => Some(l.clone()),
        CmdExpr::SrcAttr(a) => src.and_then(|o| o.attributes.get(a)).cloned(),
        CmdExpr::ParentAttr(a) => parent.and_then(|o| o.attributes.get(a)).cloned(),
        CmdExpr::Add(l, r) => {
            let (Some(lv), Some(rv)) = (eval_cmd(l, src, parent)?, eval_cmd(r, src, parent)?)
            else {
                return Ok(None);
            };
            Some(match (&lv, &rv) {
                (Literal::Str(_), _) | (_, Literal::Str(_)) => {
                    Literal::Str(format!("{}{}", lv.as_text(), rv.as_text()))
                }
                (Literal::Int(a), Literal::Int(b)) => Literal::Int(a + b),
                (Literal::Int(a), Literal::Float(b)) => Literal::Float(*a as f64 + b),
                (Literal::Float(a), Literal::Int(b)) => Literal::Float(a + *b as f64),
                (Literal::Float(a), Literal::Float(b)) => Literal::Float(a + b),
                _ => return Err(incomplete(format!("cannot apply `+` to {lv} and {rv}"))),
            })
        }
    })
}

fn run_commands(
    commands: &[Command],
    image_class: &str,
    mm_dst: &Metamodel,
    src: Option<&MObject>,
    parent: Option<&MObject>,
    attrs: &mut BTreeMap<String, Literal>,
    subject: &str,
) -> Result<(), MclError> {
    for cmd in commands {
        let Some(value) = eval_cmd(&cmd.expr, src, parent)? else { continue };
        let attr = mm_dst
            .attribute(image_class, &cmd.target_attr)
            .ok_or_else(|| {
                incomplete(format!(
                    "command target `{}` not declared on `{image_class}`",
                    cmd.target_attr
                ))
            })?;
        if !attr.ty.admits(&value) {
            return Err(incomplete(format!(
                "command `{} := {}` on `{subject}` produced {value}, which is not a {}",
                cmd.target_attr,
                cmd.expr,
                attr.ty.name()
            )));
        }
        attrs.insert(cmd.target_attr.clone(), value);
    }
    Ok(())
}

fn fill_defaults(
    image_class: &str,
    mm_dst: &Metamodel,
    attrs: &mut BTreeMap<String, Literal>,
    subject: &str,
    warnings: &mut Vec<MigrationWarning>,
) -> Result<(), MclError> {
    for attr in mm_dst.all_attributes(image_class) {
        if attr.required && !attrs.contains_key(&attr.name) {
            match &attr.default {
                Some(d) => {
                    attrs.insert(attr.name.clone(), d.clone());
                    warnings.push(MigrationWarning {
                        code: WarningCode::DefaultFilled,
                        subject: subject.to_string(),
                        message: format!(
                            "required attribute `{}` filled with the metamodel default {d}",
                            attr.name
                        ),
                    });
                }
                None => {
                    return Err(incomplete(format!(
                        "object `{subject}` of class `{image_class}` is missing required attribute `{}` and no default exists",
                        attr.name
                    )))
                }
            }
        }
    }
    Ok(())
}

/// Picks the containment role for an image under its new parent: the source
/// role when the parent's class declares it for the image class, otherwise
/// the unique accepting role.
fn attach_role(
    mm_dst: &Metamodel,
    parent_class: &str,
    child_class: &str,
    source_role: &str,
) -> Result<String, MclError> {
    if let Some(cont) = mm_dst.containment(parent_class, source_role) {
        if mm_dst.is_subtype(child_class, &cont.child_class) {
            return Ok(source_role.to_string());
        }
    }
    addition_role(mm_dst, parent_class, child_class).map_err(|_| {
        incomplete(format!(
            "no containment role on `{parent_class}` accepts `{child_class}` (source role `{source_role}`)"
        ))
    })
}

/// Migrates a model across the delta. The model must conform to the source
/// metamodel; the result is guaranteed to conform to the target metamodel.
pub fn migrate_model(
    model: &Model,
    spec: &MigrationSpec,
    mm_src: &Metamodel,
    mm_dst: &Metamodel,
) -> Result<(Model, MigrationReport), MclError> {
    let source_conformance = check_conformance(model, mm_src);
    if !source_conformance.conformant() {
        return Err(MclError::SourceNotConformant { report: source_conformance });
    }

    let mut report = MigrationReport::default();
    for (i, rule) in spec.rules.iter().enumerate() {
        if matches!(rule, crate::ast::MclRule::Map(_)) {
            report.mapped.push(RuleCount { rule: spec.rule_label(i), count: 0 });
        }
    }
    // Position of each map rule's counter within report.mapped.
    let counter_index: BTreeMap<usize, usize> =
        spec.map_rules().enumerate().map(|(k, (i, _))| (i, k)).collect();

    for e in lint_delta(spec, mm_src, mm_dst).entries {
        if e.code == LintCode::OverlappingConditions {
            report.warnings.push(MigrationWarning {
                code: WarningCode::OverlappingConditions,
                subject: e.subject,
                message: e.message,
            });
        }
    }

    // Rules per source class: non-otherwise in file order, then otherwise.
    let mut class_rules: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, rule) in spec.map_rules() {
        class_rules.entry(rule.src_class.as_str()).or_default().push(i);
    }
    for rules in class_rules.values_mut() {
        rules.sort_by_key(|i| {
            let crate::ast::MclRule::Map(r) = &spec.rules[*i] else { unreachable!() };
            (r.otherwise, *i)
        });
    }

    let src_parent = model.parent_map();

    // P1: object mapping.
    let mut fates: BTreeMap<String, Fate> = BTreeMap::new();
    let mut images: BTreeMap<String, MObject> = BTreeMap::new();
    // child image id -> (parent image id, role); None = root.
    let mut attachments: BTreeMap<String, Option<(String, String)>> = BTreeMap::new();

    for oid in model.pre_order() {
        let obj = model.object(oid).expect("pre_order yields live objects");
        let parent_entry = src_parent.get(oid).copied();

        let rule_idx = class_rules.get(obj.class_name.as_str()).and_then(|candidates| {
            candidates
                .iter()
                .copied()
                .find(|&i| {
                    let crate::ast::MclRule::Map(r) = &spec.rules[i] else { unreachable!() };
                    match &r.condition {
                        None => true,
                        Some(cond) => eval_expr(cond, &[("self", obj)], model, mm_src),
                    }
                })
        });

        // A dropped ancestor takes the whole subtree with it; only a rule
        // that both maps to a class and says `reparent` rescues an object.
        let parent_dropped = matches!(
            parent_entry.map(|(p, _)| fates.get(p)),
            Some(Some(Fate::Dropped))
        );
        if parent_dropped {
            let rescued = rule_idx.is_some_and(|i| {
                let crate::ast::MclRule::Map(r) = &spec.rules[i] else { unreachable!() };
                r.dst_class.is_some() && r.reparent.is_some()
            });
            if !rescued {
                let (pid, _) = parent_entry.expect("dropped parent exists");
                fates.insert(oid.to_string(), Fate::Dropped);
                report.dropped.push(DroppedEntry {
                    id: oid.to_string(),
                    reason: format!("contained in dropped subtree (under `{pid}`)"),
                });
                continue;
            }
        }

        // Destination class, or a drop.
        enum Target<'a> {
            Rule(usize, &'a crate::ast::MapRule),
            Identity,
        }
        let target = match rule_idx {
            Some(i) => {
                let crate::ast::MclRule::Map(r) = &spec.rules[i] else { unreachable!() };
                match &r.dst_class {
                    None => {
                        fates.insert(oid.to_string(), Fate::Dropped);
                        report.dropped.push(DroppedEntry {
                            id: oid.to_string(),
                            reason: format!("mapped to null by {}", spec.rule_label(i)),
                        });
                        continue;
                    }
                    Some(_) => Target::Rule(i, r),
                }
            }
            None => {
                if spec.identity_for_unmapped && mm_dst.class(&obj.class_name).is_some() {
                    Target::Identity
                } else {
                    fates.insert(oid.to_string(), Fate::Dropped);
                    report.dropped.push(DroppedEntry {
                        id: oid.to_string(),
                        reason: format!("class `{}` has no mapping", obj.class_name),
                    });
                    report.warnings.push(MigrationWarning {
                        code: WarningCode::UnmappedClass,
                        subject: obj.class_name.clone(),
                        message: format!(
                            "instances of `{}` dropped: no rule and no identity target",
                            obj.class_name
                        ),
                    });
                    continue;
                }
            }
        };
        let image_class = match &target {
            Target::Rule(_, r) => r.dst_class.clone().expect("null handled above"),
            Target::Identity => obj.class_name.clone(),
        };

        // Placement.
        let reparent = match &target {
            Target::Rule(_, r) => r.reparent.as_deref(),
            Target::Identity => None,
        };
        let attachment: Option<(String, String)> = if let Some(anc_class) = reparent {
            let mut cursor = parent_entry.map(|(p, _)| p);
            let mut found = None;
            while let Some(pid) = cursor {
                let pobj = model.object(pid).expect("parent exists");
                if pobj.class_name == anc_class {
                    found = Some(pid);
                    break;
                }
                cursor = src_parent.get(pid).map(|(p, _)| *p);
            }
            let anc = found.ok_or_else(|| {
                incomplete(format!(
                    "object `{oid}` has no ancestor of class `{anc_class}` to reparent under"
                ))
            })?;
            if !matches!(fates.get(anc), Some(Fate::Image)) {
                return Err(incomplete(format!(
                    "object `{oid}` reparents under `{anc}`, whose image was dropped"
                )));
            }
            let anc_image_class = images[anc].class_name.clone();
            let source_role = parent_entry.map(|(_, r)| r).unwrap_or("");
            let role = attach_role(mm_dst, &anc_image_class, &image_class, source_role)?;
            Some((anc.to_string(), role))
        } else {
            // The cascade pre-check guarantees a live parent image here.
            parent_entry.map(|(pid, role)| (pid.to_string(), role.to_string()))
        };

        // Attributes: commands, then copy-by-name, then defaults.
        let mut attrs: BTreeMap<String, Literal> = BTreeMap::new();
        let parent_obj = parent_entry.and_then(|(p, _)| model.object(p));
        let mut consumed: Vec<String> = Vec::new();
        if let Target::Rule(_, r) = &target {
            run_commands(&r.commands, &image_class, mm_dst, Some(obj), parent_obj, &mut attrs, oid)?;
            for cmd in &r.commands {
                cmd.expr.src_attrs(&mut consumed);
            }
        }
        // Unset target attributes are copied by name; a source attribute
        // with no place in the target class is dropped with a warning,
        // silently so when a command already consumed it (e.g. a rename).
        for (name, value) in &obj.attributes {
            if attrs.contains_key(name) {
                continue;
            }
            let consumed_here = consumed.iter().any(|c| c == name);
            match mm_dst.attribute(&image_class, name) {
                Some(attr) if attr.ty.admits(value) => {
                    attrs.insert(name.clone(), value.clone());
                }
                Some(attr) => {
                    if !consumed_here {
                        report.warnings.push(MigrationWarning {
                            code: WarningCode::AttrDropped,
                            subject: obj.class_name.clone(),
                            message: format!(
                                "attribute `{name}` dropped: value {value} does not fit {} on `{image_class}`",
                                attr.ty.name()
                            ),
                        });
                    }
                }
                None => {
                    if !consumed_here {
                        report.warnings.push(MigrationWarning {
                            code: WarningCode::AttrDropped,
                            subject: obj.class_name.clone(),
                            message: format!(
                                "attribute `{name}` dropped: not declared on `{image_class}`"
                            ),
                        });
                    }
                }
            }
        }
        fill_defaults(&image_class, mm_dst, &mut attrs, oid, &mut report.warnings)?;

        let mut image = MObject::new(oid, &image_class);
        image.attributes = attrs;
        images.insert(oid.to_string(), image);
        attachments.insert(oid.to_string(), attachment);
        fates.insert(oid.to_string(), Fate::Image);
        match target {
            Target::Rule(i, _) => report.mapped[counter_index[&i]].count += 1,
            Target::Identity => report.identity_carried += 1,
        }
    }

    // Assemble the post-P1 model.
    let mut migrated = Model::new(&mm_dst.name, &mm_dst.version);
    for (child, attachment) in &attachments {
        match attachment {
            None => migrated.roots.push(child.clone()),
            Some((parent, role)) => {
                images
                    .get_mut(parent)
                    .expect("attachment parents have images")
                    .children
                    .entry(role.clone())
                    .or_default()
                    .push(child.clone());
            }
        }
    }
    migrated.objects = images.into_values().collect();

    // P2: links survive when both endpoint images exist and the (renamed)
    // association admits the image classes.
    for link in &model.links {
        let reason = 'drop: {
            if !matches!(fates.get(&link.src), Some(Fate::Image)) {
                break 'drop Some(format!("source object `{}` was dropped", link.src));
            }
            if !matches!(fates.get(&link.dst), Some(Fate::Image)) {
                break 'drop Some(format!("target object `{}` was dropped", link.dst));
            }
            let target_name = spec.assoc_target(&link.association);
            let Some(assoc) = mm_dst.association(target_name) else {
                break 'drop Some(format!(
                    "association `{target_name}` is not in `{}`",
                    mm_dst.name
                ));
            };
            let src_class = &migrated.object(&link.src).unwrap().class_name;
            let dst_class = &migrated.object(&link.dst).unwrap().class_name;
            if !mm_dst.is_subtype(src_class, &assoc.src_class) {
                break 'drop Some(format!(
                    "src image class `{src_class}` does not fit `{}`",
                    assoc.src_class
                ));
            }
            if !mm_dst.is_subtype(dst_class, &assoc.dst_class) {
                break 'drop Some(format!(
                    "dst image class `{dst_class}` does not fit `{}`",
                    assoc.dst_class
                ));
            }
            migrated.links.push(MLink {
                id: link.id.clone(),
                association: target_name.to_string(),
                src: link.src.clone(),
                dst: link.dst.clone(),
            });
            None
        };
        if let Some(reason) = reason {
            report.dropped_links.push(DroppedEntry { id: link.id.clone(), reason });
        }
    }

    migrated.canonicalize();
    migrated
        .validate()
        .map_err(|e| incomplete(format!("internal: migrated model ill-formed: {e}")))?;

    // P3: additions, conditions evaluated against the post-P1 snapshot.
    let snapshot = migrated.clone();
    let mut ordinals: BTreeMap<(String, String), u32> = BTreeMap::new();
    for (_, rule) in spec.add_rules() {
        for pid in snapshot.pre_order() {
            let parent_snapshot = snapshot.object(pid).expect("snapshot object");
            if !mm_dst.is_subtype(&parent_snapshot.class_name, &rule.container_class) {
                continue;
            }
            if let Some(cond) = &rule.condition {
                if !eval_expr(cond, &[("parent", parent_snapshot)], &snapshot, mm_dst) {
                    continue;
                }
            }
            let key = (pid.to_string(), rule.new_class.clone());
            let mut ordinal = *ordinals.get(&key).unwrap_or(&0);
            let mut new_id = format!("{pid}/{}/{ordinal}", rule.new_class);
            while migrated.object(&new_id).is_some() {
                ordinal += 1;
                new_id = format!("{pid}/{}/{ordinal}", rule.new_class);
            }
            ordinals.insert(key, ordinal + 1);

            let mut attrs = BTreeMap::new();
            run_commands(
                &rule.commands,
                &rule.new_class,
                mm_dst,
                None,
                Some(parent_snapshot),
                &mut attrs,
                &new_id,
            )?;
            fill_defaults(&rule.new_class, mm_dst, &mut attrs, &new_id, &mut report.warnings)?;

            let role = addition_role(mm_dst, &parent_snapshot.class_name, &rule.new_class)?;
            let mut child = MObject::new(&new_id, &rule.new_class);
            child.attributes = attrs;
            migrated.objects.push(child);
            migrated
                .object_mut(pid)
                .expect("container image exists")
                .children
                .entry(role)
                .or_default()
                .push(new_id.clone());
            report.added_objects.push(new_id);
        }
    }

    migrated.canonicalize();
    migrated
        .validate()
        .map_err(|e| incomplete(format!("internal: migrated model ill-formed: {e}")))?;

    let conformance = check_conformance(&migrated, mm_dst);
    if !conformance.conformant() {
        return Err(MclError::Incomplete {
            msg: format!(
                "output violates `{}` v{} ({} violation(s))",
                mm_dst.name,
                mm_dst.version,
                conformance.violations.len()
            ),
            report: Some(conformance),
        });
    }

    report.warnings.sort();
    report.warnings.dedup();
    report.dropped.sort_by(|a, b| a.id.cmp(&b.id));
    report.dropped_links.sort_by(|a, b| a.id.cmp(&b.id));
    report.added_objects.sort();
    debug_assert!(report.accounts_for(model.objects.len()));
    Ok((migrated, report))
}
