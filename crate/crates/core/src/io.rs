//! Canonical JSON interchange.
//!
//! One document per file, UTF-8. Canonical form sorts every map by key and
//! every sibling list by id/name, so `load . save` is the identity and two
//! permutations of the same document serialize byte-identically.

use crate::error::CoreError;
use crate::metamodel::Metamodel;
use crate::model::Model;

pub fn load_metamodel(text: &str) -> Result<Metamodel, CoreError> {
    let mut mm: Metamodel =
        serde_json::from_str(text).map_err(|e| CoreError::Parse(e.to_string()))?;
    mm.validate()?;
    mm.canonicalize();
    Ok(mm)
}

pub fn save_metamodel(mm: &Metamodel) -> String {
    let mut mm = mm.clone();
    mm.canonicalize();
    let mut out = serde_json::to_string_pretty(&mm).expect("metamodel serializes");
    out.push('\n');
    out
}

pub fn load_model(text: &str) -> Result<Model, CoreError> {
    let mut m: Model = serde_json::from_str(text).map_err(|e| CoreError::Parse(e.to_string()))?;
    m.validate()?;
    m.canonicalize();
    Ok(m)
}

pub fn save_model(m: &Model) -> String {
    let mut m = m.clone();
    m.canonicalize();
    let mut out = serde_json::to_string_pretty(&m).expect("model serializes");
    out.push('\n');
    out
}
