//! Rule-graph data model and its JSON interchange form.

use serde::{Deserialize, Serialize};

/// Serialized as the literal string "!null" when the class was deleted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassRef {
    Class(String),
    Null,
}

impl ClassRef {
    pub fn name(&self) -> Option<&str> {
        match self {
            ClassRef::Class(c) => Some(c),
            ClassRef::Null => None,
        }
    }
}

impl Serialize for ClassRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ClassRef::Class(c) => s.serialize_str(c),
            ClassRef::Null => s.serialize_str("!null"),
        }
    }
}

impl<'de> Deserialize<'de> for ClassRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(if s == "!null" { ClassRef::Null } else { ClassRef::Class(s) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "source")]
    Source,
    #[serde(rename = "destination")]
    Destination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "match")]
    Match,
    #[serde(rename = "create")]
    Create,
    #[serde(rename = "delete")]
    Delete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternNode {
    pub id: String,
    pub side: Side,
    #[serde(rename = "class")]
    pub class_ref: ClassRef,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternEdge {
    pub src: String,
    pub dst: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttrOp {
    pub node: String,
    pub attr: String,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    #[serde(default)]
    pub nodes: Vec<PatternNode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<PatternEdge>,
    #[serde(default, rename = "attrOps", skip_serializing_if = "Vec::is_empty")]
    pub attr_ops: Vec<AttrOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleGraph {
    pub name: String,
    #[serde(default)]
    pub rules: Vec<Rule>,
}

pub fn load_rulegraph(text: &str) -> Result<RuleGraph, crate::migrate::UmmieError> {
    serde_json::from_str(text)
        .map_err(|e| crate::migrate::UmmieError::Illformed(format!("parse error: {e}")))
}

pub fn save_rulegraph(rg: &RuleGraph) -> String {
    let mut s = serde_json::to_string_pretty(rg).expect("rule graph serializes");
    s.push('\n');
    s
}
