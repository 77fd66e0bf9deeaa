//! Metamodel side of the data model: classes, attributes, containments and
//! associations, plus well-formedness validation and subtype queries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::model::Literal;

/// Upper bound of a multiplicity: a finite count or the "many" marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxBound {
    Finite(u32),
    Many,
}

impl MaxBound {
    pub fn admits(&self, n: usize) -> bool {
        match self {
            MaxBound::Finite(m) => n <= *m as usize,
            MaxBound::Many => true,
        }
    }
}

impl std::fmt::Display for MaxBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaxBound::Finite(m) => write!(f, "{m}"),
            MaxBound::Many => write!(f, "many"),
        }
    }
}

impl Serialize for MaxBound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MaxBound::Finite(m) => s.serialize_u32(*m),
            MaxBound::Many => s.serialize_str("many"),
        }
    }
}

impl<'de> Deserialize<'de> for MaxBound {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(n) => n
                .as_u64()
                .filter(|n| *n <= u32::MAX as u64)
                .map(|n| MaxBound::Finite(n as u32))
                .ok_or_else(|| D::Error::custom("multiplicity bound out of range")),
            serde_json::Value::String(s) if s == "many" => Ok(MaxBound::Many),
            other => Err(D::Error::custom(format!(
                "expected a number or \"many\", got {other}"
            ))),
        }
    }
}

/// Multiplicity range on an association end. Defaults to (0, many).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    #[serde(default)]
    pub min: u32,
    #[serde(default = "many")]
    pub max: MaxBound,
}

fn many() -> MaxBound {
    MaxBound::Many
}

impl Default for Multiplicity {
    fn default() -> Self {
        Multiplicity { min: 0, max: MaxBound::Many }
    }
}

impl std::fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

/// Primitive attribute types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrimType {
    Str,
    Int,
    Float,
    Bool,
    Enum(Vec<String>),
}

impl PrimType {
    pub fn name(&self) -> &'static str {
        match self {
            PrimType::Str => "string",
            PrimType::Int => "int",
            PrimType::Float => "float",
            PrimType::Bool => "bool",
            PrimType::Enum(_) => "enum",
        }
    }

    /// Whether a literal value belongs to this type.
    pub fn admits(&self, lit: &Literal) -> bool {
        match (self, lit) {
            (PrimType::Str, Literal::Str(_)) => true,
            (PrimType::Int, Literal::Int(_)) => true,
            (PrimType::Float, Literal::Float(_)) => true,
            (PrimType::Bool, Literal::Bool(_)) => true,
            (PrimType::Enum(values), Literal::Str(s)) => values.iter().any(|v| v == s),
            _ => false,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AttrWire {
    name: String,
    #[serde(rename = "type")]
    ty: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    values: Vec<String>,
    #[serde(default)]
    required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<Literal>,
}

/// Attribute declaration on a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AttrWire", into = "AttrWire")]
pub struct MAttribute {
    pub name: String,
    pub ty: PrimType,
    pub required: bool,
    pub default: Option<Literal>,
}

impl TryFrom<AttrWire> for MAttribute {
    type Error = String;

    fn try_from(w: AttrWire) -> Result<Self, String> {
        let ty = match w.ty.as_str() {
            "string" => PrimType::Str,
            "int" => PrimType::Int,
            "float" => PrimType::Float,
            "bool" => PrimType::Bool,
            "enum" => PrimType::Enum(w.values),
            other => return Err(format!("unknown attribute type `{other}`")),
        };
        Ok(MAttribute { name: w.name, ty, required: w.required, default: w.default })
    }
}

impl From<MAttribute> for AttrWire {
    fn from(a: MAttribute) -> Self {
        let values = match &a.ty {
            PrimType::Enum(vs) => vs.clone(),
            _ => Vec::new(),
        };
        AttrWire {
            name: a.name,
            ty: a.ty.name().to_string(),
            values,
            required: a.required,
            default: a.default,
        }
    }
}

/// Containment declaration: this class owns children of `child_class` under `role`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MContainment {
    pub role: String,
    #[serde(rename = "class")]
    pub child_class: String,
    #[serde(default)]
    pub min: u32,
    #[serde(default = "many")]
    pub max: MaxBound,
}

/// Class declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MClass {
    pub name: String,
    #[serde(rename = "abstract", default)]
    pub is_abstract: bool,
    #[serde(rename = "super", default, skip_serializing_if = "Option::is_none")]
    pub superclass: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<MAttribute>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub containments: Vec<MContainment>,
}

/// Binary association between two classes with named ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MAssociation {
    pub name: String,
    #[serde(rename = "src")]
    pub src_class: String,
    #[serde(rename = "dst")]
    pub dst_class: String,
    #[serde(rename = "srcRole")]
    pub src_role: String,
    #[serde(rename = "dstRole")]
    pub dst_role: String,
    #[serde(rename = "srcMult", default)]
    pub src_mult: Multiplicity,
    #[serde(rename = "dstMult", default)]
    pub dst_mult: Multiplicity,
}

/// A metamodel: the language definition a model instantiates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metamodel {
    pub name: String,
    pub version: String,
    #[serde(default)]
    pub classes: Vec<MClass>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub associations: Vec<MAssociation>,
}

impl Metamodel {
    pub fn class(&self, name: &str) -> Option<&MClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn association(&self, name: &str) -> Option<&MAssociation> {
        self.associations.iter().find(|a| a.name == name)
    }

    /// True when `sub` equals `sup` or inherits from it (transitively).
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let mut cur = Some(sub);
        while let Some(name) = cur {
            if name == sup {
                return true;
            }
            cur = self.class(name).and_then(|c| c.superclass.as_deref());
        }
        false
    }

    /// Attributes declared on the class or inherited from its ancestors.
    pub fn all_attributes(&self, class: &str) -> Vec<&MAttribute> {
        let mut out = Vec::new();
        let mut cur = self.class(class);
        while let Some(c) = cur {
            out.extend(c.attributes.iter());
            cur = c.superclass.as_deref().and_then(|s| self.class(s));
        }
        out
    }

    pub fn attribute(&self, class: &str, attr: &str) -> Option<&MAttribute> {
        self.all_attributes(class).into_iter().find(|a| a.name == attr)
    }

    /// Containments declared on the class or inherited.
    pub fn all_containments(&self, class: &str) -> Vec<&MContainment> {
        let mut out = Vec::new();
        let mut cur = self.class(class);
        while let Some(c) = cur {
            out.extend(c.containments.iter());
            cur = c.superclass.as_deref().and_then(|s| self.class(s));
        }
        out
    }

    pub fn containment(&self, class: &str, role: &str) -> Option<&MContainment> {
        self.all_containments(class).into_iter().find(|c| c.role == role)
    }

    /// Class names in declaration order.
    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|c| c.name.as_str())
    }

    /// Checks every metamodel invariant, reporting the first violation found.
    pub fn validate(&self) -> Result<(), CoreError> {
        let ill = |msg: String| Err(CoreError::MetamodelIllformed(msg));

        let mut seen = BTreeSet::new();
        for c in &self.classes {
            if !seen.insert(c.name.as_str()) {
                return ill(format!("duplicate class `{}`", c.name));
            }
        }

        // Inheritance: superclasses must exist and the graph must be acyclic.
        for c in &self.classes {
            if let Some(sup) = &c.superclass {
                if self.class(sup).is_none() {
                    return ill(format!("class `{}` extends unknown class `{sup}`", c.name));
                }
            }
            let mut slow = c.name.as_str();
            let mut visited = BTreeSet::new();
            while let Some(sup) = self.class(slow).and_then(|k| k.superclass.as_deref()) {
                if !visited.insert(sup) {
                    return ill(format!("inheritance cycle through class `{}`", c.name));
                }
                if sup == c.name {
                    return ill(format!("inheritance cycle through class `{}`", c.name));
                }
                slow = sup;
            }
        }

        for c in &self.classes {
            let attrs = self.all_attributes(&c.name);
            let mut names = BTreeSet::new();
            for a in &attrs {
                if !names.insert(a.name.as_str()) {
                    return ill(format!(
                        "class `{}` declares or inherits attribute `{}` twice",
                        c.name, a.name
                    ));
                }
                if let Some(d) = &a.default {
                    if !a.ty.admits(d) {
                        return ill(format!(
                            "default for attribute `{}.{}` does not match type {}",
                            c.name,
                            a.name,
                            a.ty.name()
                        ));
                    }
                }
            }
            let conts = self.all_containments(&c.name);
            let mut roles = BTreeSet::new();
            for k in &conts {
                if !roles.insert(k.role.as_str()) {
                    return ill(format!(
                        "class `{}` declares or inherits containment role `{}` twice",
                        c.name, k.role
                    ));
                }
                if self.class(&k.child_class).is_none() {
                    return ill(format!(
                        "containment `{}.{}` names unknown class `{}`",
                        c.name, k.role, k.child_class
                    ));
                }
                if let MaxBound::Finite(max) = k.max {
                    if k.min > max {
                        return ill(format!(
                            "containment `{}.{}` has min {} > max {}",
                            c.name, k.role, k.min, max
                        ));
                    }
                }
            }
        }

        let mut assoc_names = BTreeSet::new();
        for a in &self.associations {
            if !assoc_names.insert(a.name.as_str()) {
                return ill(format!("duplicate association `{}`", a.name));
            }
            for end in [&a.src_class, &a.dst_class] {
                if self.class(end).is_none() {
                    return ill(format!(
                        "association `{}` references unknown class `{end}`",
                        a.name
                    ));
                }
            }
            if a.src_role == a.dst_role {
                return ill(format!(
                    "association `{}` uses role `{}` on both ends",
                    a.name, a.src_role
                ));
            }
            for (mult, side) in [(&a.src_mult, "src"), (&a.dst_mult, "dst")] {
                if let MaxBound::Finite(max) = mult.max {
                    if mult.min > max {
                        return ill(format!(
                            "association `{}` {side} multiplicity has min > max",
                            a.name
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Sorts classes, associations and their members into canonical order.
    pub fn canonicalize(&mut self) {
        self.classes.sort_by(|a, b| a.name.cmp(&b.name));
        for c in &mut self.classes {
            c.attributes.sort_by(|a, b| a.name.cmp(&b.name));
            for a in &mut c.attributes {
                if let PrimType::Enum(vs) = &mut a.ty {
                    vs.sort();
                }
            }
            c.containments.sort_by(|a, b| a.role.cmp(&b.role));
        }
        self.associations.sort_by(|a, b| a.name.cmp(&b.name));
    }
}

/// Convenience builder used by tests and fixtures.
impl Metamodel {
    pub fn new(name: &str, version: &str) -> Self {
        Metamodel {
            name: name.to_string(),
            version: version.to_string(),
            classes: Vec::new(),
            associations: Vec::new(),
        }
    }
}

#[allow(dead_code)]
fn _assert_maps_sorted() {
    // serde_json maps are BTreeMap-backed by default, which canonical output
    // relies on; this marker fails to compile if the preserve_order feature
    // sneaks in through the dependency tree.
    let _: BTreeMap<String, serde_json::Value> = serde_json::Map::new().into_iter().collect();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(name: &str, sup: Option<&str>) -> MClass {
        MClass {
            name: name.to_string(),
            is_abstract: false,
            superclass: sup.map(|s| s.to_string()),
            attributes: Vec::new(),
            containments: Vec::new(),
        }
    }

    #[test]
    fn inheritance_cycle_is_rejected() {
        let mut mm = Metamodel::new("m", "1");
        mm.classes.push(class("A", Some("B")));
        mm.classes.push(class("B", Some("A")));
        let err = mm.validate().unwrap_err();
        assert!(matches!(err, CoreError::MetamodelIllformed(_)), "{err}");
    }

    #[test]
    fn duplicate_class_is_rejected() {
        let mut mm = Metamodel::new("m", "1");
        mm.classes.push(class("A", None));
        mm.classes.push(class("A", None));
        assert!(mm.validate().is_err());
    }

    #[test]
    fn subtype_walks_chain() {
        let mut mm = Metamodel::new("m", "1");
        mm.classes.push(class("A", None));
        mm.classes.push(class("B", Some("A")));
        mm.classes.push(class("C", Some("B")));
        assert!(mm.is_subtype("C", "A"));
        assert!(mm.is_subtype("A", "A"));
        assert!(!mm.is_subtype("A", "C"));
    }

    #[test]
    fn inherited_attribute_clash_is_rejected() {
        let mut mm = Metamodel::new("m", "1");
        let mut a = class("A", None);
        a.attributes.push(MAttribute {
            name: "x".into(),
            ty: PrimType::Int,
            required: false,
            default: None,
        });
        let mut b = class("B", Some("A"));
        b.attributes.push(MAttribute {
            name: "x".into(),
            ty: PrimType::Str,
            required: false,
            default: None,
        });
        mm.classes.push(a);
        mm.classes.push(b);
        assert!(mm.validate().is_err());
    }
}
