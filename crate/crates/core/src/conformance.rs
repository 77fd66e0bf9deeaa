//! Class-level conformance checking of a model against a metamodel.
//!
//! Loading only enforces referential integrity, so legacy models that no
//! longer fit an evolved metamodel still load; this pass reports the typing
//! and multiplicity violations as data instead of failing.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::metamodel::Metamodel;
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ViolationCode {
    #[serde(rename = "UNKNOWN_CLASS")]
    UnknownClass,
    #[serde(rename = "ABSTRACT_INSTANTIATION")]
    AbstractInstantiation,
    #[serde(rename = "MISSING_REQUIRED_ATTR")]
    MissingRequiredAttr,
    #[serde(rename = "ATTR_TYPE_MISMATCH")]
    AttrTypeMismatch,
    #[serde(rename = "UNKNOWN_ATTR")]
    UnknownAttr,
    #[serde(rename = "BAD_CONTAINMENT_ROLE")]
    BadContainmentRole,
    #[serde(rename = "CONTAINMENT_MULT")]
    ContainmentMult,
    #[serde(rename = "UNKNOWN_ASSOC")]
    UnknownAssoc,
    #[serde(rename = "LINK_END_TYPE")]
    LinkEndType,
    #[serde(rename = "LINK_MULT")]
    LinkMult,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::UnknownClass => "UNKNOWN_CLASS",
            ViolationCode::AbstractInstantiation => "ABSTRACT_INSTANTIATION",
            ViolationCode::MissingRequiredAttr => "MISSING_REQUIRED_ATTR",
            ViolationCode::AttrTypeMismatch => "ATTR_TYPE_MISMATCH",
            ViolationCode::UnknownAttr => "UNKNOWN_ATTR",
            ViolationCode::BadContainmentRole => "BAD_CONTAINMENT_ROLE",
            ViolationCode::ContainmentMult => "CONTAINMENT_MULT",
            ViolationCode::UnknownAssoc => "UNKNOWN_ASSOC",
            ViolationCode::LinkEndType => "LINK_END_TYPE",
            ViolationCode::LinkMult => "LINK_MULT",
        }
    }
}

impl std::fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Object or link id the violation is anchored to.
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformanceReport {
    pub metamodel: String,
    pub conformant: bool,
    pub violations: Vec<Violation>,
}

impl ConformanceReport {
    pub fn conformant(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if self.violations.is_empty() {
            out.push_str(&format!("conformant to metamodel `{}`\n", self.metamodel));
        } else {
            for v in &self.violations {
                out.push_str(&format!("{} {}: {}\n", v.code, v.subject, v.message));
            }
            out.push_str(&format!(
                "{} violation(s) against metamodel `{}`\n",
                self.violations.len(),
                self.metamodel
            ));
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Checks a model against a metamodel and returns the complete, deterministic
/// list of violations, sorted by subject id then code.
///
/// Objects of unknown class are reported once and skipped by the typed checks
/// (attribute typing, link end types, multiplicities), so a class removed
/// from the metamodel yields exactly one violation per surviving instance.
pub fn check_conformance(model: &Model, mm: &Metamodel) -> ConformanceReport {
    let mut violations: Vec<Violation> = Vec::new();
    let mut push = |code: ViolationCode, subject: &str, message: String| {
        violations.push(Violation { code, subject: subject.to_string(), message });
    };

    for obj in &model.objects {
        let class = match mm.class(&obj.class_name) {
            Some(c) => c,
            None => {
                push(
                    ViolationCode::UnknownClass,
                    &obj.id,
                    format!("class `{}` is not in the metamodel", obj.class_name),
                );
                continue;
            }
        };
        if class.is_abstract {
            push(
                ViolationCode::AbstractInstantiation,
                &obj.id,
                format!("class `{}` is abstract", class.name),
            );
        }

        let declared = mm.all_attributes(&class.name);
        for (name, value) in &obj.attributes {
            match declared.iter().find(|a| &a.name == name) {
                None => push(
                    ViolationCode::UnknownAttr,
                    &obj.id,
                    format!("attribute `{name}` is not declared on `{}`", class.name),
                ),
                Some(attr) if !attr.ty.admits(value) => push(
                    ViolationCode::AttrTypeMismatch,
                    &obj.id,
                    format!(
                        "attribute `{name}` expects {} but holds {value}",
                        attr.ty.name()
                    ),
                ),
                _ => {}
            }
        }
        for attr in &declared {
            if attr.required && !obj.attributes.contains_key(&attr.name) {
                push(
                    ViolationCode::MissingRequiredAttr,
                    &obj.id,
                    format!("required attribute `{}` is unset", attr.name),
                );
            }
        }

        let containments = mm.all_containments(&class.name);
        for (role, kids) in &obj.children {
            match containments.iter().find(|c| &c.role == role) {
                None => push(
                    ViolationCode::BadContainmentRole,
                    &obj.id,
                    format!("role `{role}` is not declared on `{}`", class.name),
                ),
                Some(cont) => {
                    for kid in kids {
                        // Unknown-class children already carry their own violation.
                        if let Some(kid_obj) = model.object(kid) {
                            if mm.class(&kid_obj.class_name).is_some()
                                && !mm.is_subtype(&kid_obj.class_name, &cont.child_class)
                            {
                                push(
                                    ViolationCode::BadContainmentRole,
                                    &obj.id,
                                    format!(
                                        "child `{kid}` of class `{}` does not fit role `{role}` ({})",
                                        kid_obj.class_name, cont.child_class
                                    ),
                                );
                            }
                        }
                    }
                }
            }
        }
        for cont in &containments {
            let n = obj.children.get(&cont.role).map_or(0, |k| k.len());
            if n < cont.min as usize || !cont.max.admits(n) {
                push(
                    ViolationCode::ContainmentMult,
                    &obj.id,
                    format!(
                        "role `{}` holds {n} children, expected {}..{}",
                        cont.role, cont.min, cont.max
                    ),
                );
            }
        }
    }

    // Link typing. Ends with unknown classes are skipped: the objects already
    // carry UNKNOWN_CLASS violations.
    let known_class =
        |id: &str| model.object(id).filter(|o| mm.class(&o.class_name).is_some());
    for link in &model.links {
        let assoc = match mm.association(&link.association) {
            Some(a) => a,
            None => {
                push(
                    ViolationCode::UnknownAssoc,
                    &link.id,
                    format!("association `{}` is not in the metamodel", link.association),
                );
                continue;
            }
        };
        for (end_id, end_class, end_name) in [
            (&link.src, &assoc.src_class, "src"),
            (&link.dst, &assoc.dst_class, "dst"),
        ] {
            if let Some(obj) = known_class(end_id) {
                if !mm.is_subtype(&obj.class_name, end_class) {
                    push(
                        ViolationCode::LinkEndType,
                        &link.id,
                        format!(
                            "{end_name} end `{end_id}` has class `{}`, expected a subtype of `{end_class}`",
                            obj.class_name
                        ),
                    );
                }
            }
        }
    }

    // Link multiplicities: for each association, the dst multiplicity bounds
    // how many links each src-capable object may originate, and vice versa.
    let mut out_count: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    let mut in_count: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for link in &model.links {
        *out_count.entry((link.association.as_str(), link.src.as_str())).or_insert(0) += 1;
        *in_count.entry((link.association.as_str(), link.dst.as_str())).or_insert(0) += 1;
    }
    for assoc in &mm.associations {
        for obj in &model.objects {
            if mm.class(&obj.class_name).is_none() {
                continue;
            }
            if mm.is_subtype(&obj.class_name, &assoc.src_class) {
                let n = out_count
                    .get(&(assoc.name.as_str(), obj.id.as_str()))
                    .copied()
                    .unwrap_or(0);
                if n < assoc.dst_mult.min as usize || !assoc.dst_mult.max.admits(n) {
                    push(
                        ViolationCode::LinkMult,
                        &obj.id,
                        format!(
                            "object plays `{}` src in {n} link(s), expected {}",
                            assoc.name, assoc.dst_mult
                        ),
                    );
                }
            }
            if mm.is_subtype(&obj.class_name, &assoc.dst_class) {
                let n = in_count
                    .get(&(assoc.name.as_str(), obj.id.as_str()))
                    .copied()
                    .unwrap_or(0);
                if n < assoc.src_mult.min as usize || !assoc.src_mult.max.admits(n) {
                    push(
                        ViolationCode::LinkMult,
                        &obj.id,
                        format!(
                            "object plays `{}` dst in {n} link(s), expected {}",
                            assoc.name, assoc.src_mult
                        ),
                    );
                }
            }
        }
    }

    violations.sort_by(|a, b| {
        a.subject
            .cmp(&b.subject)
            .then_with(|| a.code.cmp(&b.code))
            .then_with(|| a.message.cmp(&b.message))
    });
    ConformanceReport {
        metamodel: mm.name.clone(),
        conformant: violations.is_empty(),
        violations,
    }
}
