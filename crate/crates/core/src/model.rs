//! Model side of the data model: typed object graphs with a containment
//! forest and cross-links, plus referential-integrity validation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Attribute value. Untagged: JSON scalars map directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Literal {
    /// Plain-text rendering used in reports and string concatenation.
    pub fn as_text(&self) -> String {
        match self {
            Literal::Bool(b) => b.to_string(),
            Literal::Int(i) => i.to_string(),
            Literal::Float(f) => {
                let mut s = serde_json::to_string(f).unwrap_or_else(|_| f.to_string());
                if !s.contains('.') && !s.contains('e') && !s.contains("inf") {
                    s.push_str(".0");
                }
                s
            }
            Literal::Str(s) => s.clone(),
        }
    }
}

impl std::fmt::Display for Literal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Literal::Str(s) => write!(f, "{s:?}"),
            other => write!(f, "{}", other.as_text()),
        }
    }
}

/// An object: instance of a metamodel class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MObject {
    pub id: String,
    #[serde(rename = "class")]
    pub class_name: String,
    #[serde(rename = "attrs", default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, Literal>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub children: BTreeMap<String, Vec<String>>,
}

impl MObject {
    pub fn new(id: &str, class: &str) -> Self {
        MObject {
            id: id.to_string(),
            class_name: class.to_string(),
            attributes: BTreeMap::new(),
            children: BTreeMap::new(),
        }
    }

    /// All child ids across every containment role.
    pub fn child_ids(&self) -> impl Iterator<Item = &str> {
        self.children.values().flatten().map(|s| s.as_str())
    }
}

/// A link: instance of a metamodel association.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLink {
    pub id: String,
    #[serde(rename = "assoc")]
    pub association: String,
    pub src: String,
    pub dst: String,
}

/// A model: typed object graph conforming (or not) to a named metamodel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    #[serde(rename = "metamodel")]
    pub metamodel_name: String,
    #[serde(rename = "metamodelVersion")]
    pub metamodel_version: String,
    #[serde(default)]
    pub roots: Vec<String>,
    #[serde(default)]
    pub objects: Vec<MObject>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<MLink>,
}

impl Model {
    pub fn new(metamodel: &str, version: &str) -> Self {
        Model {
            metamodel_name: metamodel.to_string(),
            metamodel_version: version.to_string(),
            roots: Vec::new(),
            objects: Vec::new(),
            links: Vec::new(),
        }
    }

    pub fn object(&self, id: &str) -> Option<&MObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_mut(&mut self, id: &str) -> Option<&mut MObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn link(&self, id: &str) -> Option<&MLink> {
        self.links.iter().find(|l| l.id == id)
    }

    /// Map from child id to (parent id, containment role).
    pub fn parent_map(&self) -> BTreeMap<&str, (&str, &str)> {
        let mut out = BTreeMap::new();
        for o in &self.objects {
            for (role, kids) in &o.children {
                for kid in kids {
                    out.insert(kid.as_str(), (o.id.as_str(), role.as_str()));
                }
            }
        }
        out
    }

    /// Object ids in containment pre-order: roots sorted by id, then each
    /// object's children (across all roles) sorted by id, recursively.
    pub fn pre_order(&self) -> Vec<&str> {
        let mut roots: Vec<&str> = self.roots.iter().map(|s| s.as_str()).collect();
        roots.sort_unstable();
        let mut out = Vec::with_capacity(self.objects.len());
        let mut stack: Vec<&str> = Vec::new();
        for r in roots.iter().rev() {
            stack.push(r);
        }
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some(obj) = self.object(id) {
                let mut kids: Vec<&str> = obj.child_ids().collect();
                kids.sort_unstable();
                for k in kids.iter().rev() {
                    stack.push(k);
                }
            }
        }
        out
    }

    /// Checks referential integrity: unique ids, a containment forest
    /// (every non-root object has exactly one parent, no cycles), and link
    /// endpoints that exist. Class-level conformance is a separate concern.
    pub fn validate(&self) -> Result<(), CoreError> {
        let ill = |msg: String| Err(CoreError::ModelIllformed(msg));

        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                return ill(format!("duplicate object id `{}`", o.id));
            }
        }
        let mut link_ids = BTreeSet::new();
        for l in &self.links {
            if !link_ids.insert(l.id.as_str()) {
                return ill(format!("duplicate link id `{}`", l.id));
            }
        }

        let mut root_set = BTreeSet::new();
        for r in &self.roots {
            if !ids.contains(r.as_str()) {
                return ill(format!("root `{r}` is not an object in the model"));
            }
            if !root_set.insert(r.as_str()) {
                return ill(format!("root `{r}` listed twice"));
            }
        }

        // Each object is either a root or referenced exactly once as a child.
        let mut referenced: BTreeMap<&str, u32> = BTreeMap::new();
        for o in &self.objects {
            for kid in o.child_ids() {
                if !ids.contains(kid) {
                    return ill(format!(
                        "object `{}` contains unknown child `{kid}`",
                        o.id
                    ));
                }
                *referenced.entry(kid).or_insert(0) += 1;
            }
        }
        for o in &self.objects {
            let n = referenced.get(o.id.as_str()).copied().unwrap_or(0);
            let is_root = root_set.contains(o.id.as_str());
            match (is_root, n) {
                (true, 0) => {}
                (true, _) => {
                    return ill(format!("root `{}` is also contained in another object", o.id))
                }
                (false, 1) => {}
                (false, 0) => {
                    return ill(format!("object `{}` is neither a root nor contained", o.id))
                }
                (false, _) => return ill(format!("object `{}` has multiple parents", o.id)),
            }
        }

        // Unique parents rule out diamonds; cycles would be unreachable from
        // the roots, so reachability covering every object closes the check.
        let reachable = self.pre_order().len();
        if reachable != self.objects.len() {
            return ill("containment cycle detected (objects unreachable from roots)".to_string());
        }

        for l in &self.links {
            for end in [&l.src, &l.dst] {
                if !ids.contains(end.as_str()) {
                    return ill(format!("link `{}` references unknown object `{end}`", l.id));
                }
            }
        }
        Ok(())
    }

    /// Sorts objects, links, roots and child lists into canonical order.
    pub fn canonicalize(&mut self) {
        self.objects.sort_by(|a, b| a.id.cmp(&b.id));
        self.links.sort_by(|a, b| a.id.cmp(&b.id));
        self.roots.sort();
        for o in &mut self.objects {
            for kids in o.children.values_mut() {
                kids.sort();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> Model {
        let mut m = Model::new("m", "1");
        let mut a = MObject::new("a", "A");
        a.children.insert("kids".into(), vec!["b".into()]);
        m.objects.push(a);
        m.objects.push(MObject::new("b", "A"));
        m.roots.push("a".into());
        m
    }

    #[test]
    fn valid_forest_passes() {
        assert!(two_level().validate().is_ok());
    }

    #[test]
    fn dangling_link_is_rejected() {
        let mut m = two_level();
        m.links.push(MLink {
            id: "l1".into(),
            association: "X".into(),
            src: "a".into(),
            dst: "missing".into(),
        });
        assert!(m.validate().is_err());
    }

    #[test]
    fn containment_cycle_is_rejected() {
        let mut m = two_level();
        m.object_mut("b").unwrap().children.insert("kids".into(), vec!["c".into()]);
        let mut c = MObject::new("c", "A");
        c.children.insert("kids".into(), vec!["b".into()]);
        m.objects.push(c);
        // b now has two parents (a and c); c is contained by b.
        assert!(m.validate().is_err());
    }

    #[test]
    fn multiple_parents_rejected() {
        let mut m = two_level();
        let mut c = MObject::new("c", "A");
        c.children.insert("kids".into(), vec!["b".into()]);
        m.objects.push(c);
        m.roots.push("c".into());
        assert!(m.validate().is_err());
    }

    #[test]
    fn pre_order_visits_children_sorted() {
        let mut m = Model::new("m", "1");
        let mut r = MObject::new("r", "A");
        r.children.insert("x".into(), vec!["z".into()]);
        r.children.insert("y".into(), vec!["b".into()]);
        m.objects.push(r);
        m.objects.push(MObject::new("z", "A"));
        m.objects.push(MObject::new("b", "A"));
        m.roots.push("r".into());
        assert_eq!(m.pre_order(), vec!["r", "b", "z"]);
    }
}
