//! Three-way merge: both sides are matched against the common ancestor,
//! their change sets are extracted, and every non-overlapping change is
//! applied to a copy of the base. Overlapping incompatible changes become
//! conflicts at attribute granularity; the merged model keeps the base value
//! for every conflicting entry, so nothing is lost silently.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use evolvekit_core::{Literal, MLink, MObject, Model};

use crate::error::DiffError;
use crate::matcher::{match_models, MatchConfig, Matching};
use crate::ReportFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConflictKind {
    #[serde(rename = "attr-attr")]
    AttrAttr,
    #[serde(rename = "delete-change")]
    DeleteChange,
    #[serde(rename = "move-move")]
    MoveMove,
}

impl std::fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConflictKind::AttrAttr => "attr-attr",
            ConflictKind::DeleteChange => "delete-change",
            ConflictKind::MoveMove => "move-move",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub base_id: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MergeResult {
    pub merged: Model,
    pub conflicts: Vec<Conflict>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum ParentRef {
    Root,
    /// A base object (the side parent mapped back through the matching).
    Base(String),
    /// An object added on the same side, by its side id.
    Added(String),
}

impl ParentRef {
    fn describe(&self) -> String {
        match self {
            ParentRef::Root => "<root>".into(),
            ParentRef::Base(id) => id.clone(),
            ParentRef::Added(id) => format!("{id} (added)"),
        }
    }
}

#[derive(Debug, Clone)]
struct AddedObject {
    side_id: String,
    object: MObject,
    parent: ParentRef,
    role: String,
}

#[derive(Debug, Default)]
struct SideOps {
    deleted: BTreeSet<String>,
    /// base id -> attr -> new value (None removes the attribute)
    edits: BTreeMap<String, BTreeMap<String, Option<Literal>>>,
    /// base id -> (new parent, role)
    moves: BTreeMap<String, (ParentRef, String)>,
    /// side pre-order, so parents precede children
    added: Vec<AddedObject>,
    links_removed: BTreeSet<String>,
    links_added: Vec<MLink>,
}

impl SideOps {
    fn touches(&self, base_id: &str) -> bool {
        self.edits.contains_key(base_id) || self.moves.contains_key(base_id)
    }
}

fn extract_ops(base: &Model, side: &Model, matching: &Matching) -> SideOps {
    let mut ops = SideOps::default();
    let matched_side: BTreeSet<&str> = matching.pairs.iter().map(|p| p.right.as_str()).collect();
    let matched_base: BTreeSet<&str> = matching.pairs.iter().map(|p| p.left.as_str()).collect();

    for o in &base.objects {
        if !matched_base.contains(o.id.as_str()) {
            ops.deleted.insert(o.id.clone());
        }
    }

    let base_parent = base.parent_map();
    let side_parent = side.parent_map();

    let mut pairs: Vec<(&str, &str)> = matching
        .pairs
        .iter()
        .map(|p| (p.left.as_str(), p.right.as_str()))
        .collect();
    pairs.sort();
    for (bid, sid) in &pairs {
        let (Some(bo), Some(so)) = (base.object(bid), side.object(sid)) else { continue };
        let names: BTreeSet<&str> = bo
            .attributes
            .keys()
            .chain(so.attributes.keys())
            .map(|s| s.as_str())
            .collect();
        for name in names {
            let old = bo.attributes.get(name);
            let new = so.attributes.get(name);
            if old != new {
                ops.edits
                    .entry(bid.to_string())
                    .or_default()
                    .insert(name.to_string(), new.cloned());
            }
        }

        let bp = base_parent.get(bid).map(|(p, _)| *p);
        let (sp, srole) = match side_parent.get(sid) {
            Some((p, r)) => (Some(*p), *r),
            None => (None, ""),
        };
        let side_parent_ref = match sp {
            None => ParentRef::Root,
            Some(p) => match matching.left_of(p) {
                Some(b) => ParentRef::Base(b.to_string()),
                None => ParentRef::Added(p.to_string()),
            },
        };
        let unchanged = match (&side_parent_ref, bp) {
            (ParentRef::Root, None) => true,
            (ParentRef::Base(b), Some(bp)) => b == bp,
            _ => false,
        };
        if !unchanged {
            ops.moves.insert(bid.to_string(), (side_parent_ref, srole.to_string()));
        }
    }

    // Additions in side pre-order, children restricted to same-side added
    // objects (matched children arrive through their own move entries).
    let added_ids: BTreeSet<&str> = side
        .objects
        .iter()
        .map(|o| o.id.as_str())
        .filter(|id| !matched_side.contains(id))
        .collect();
    for sid in side.pre_order() {
        if !added_ids.contains(sid) {
            continue;
        }
        let so = side.object(sid).expect("pre_order yields existing objects");
        let mut clone = so.clone();
        clone.children = so
            .children
            .iter()
            .map(|(role, kids)| {
                let kept: Vec<String> = kids
                    .iter()
                    .filter(|k| added_ids.contains(k.as_str()))
                    .cloned()
                    .collect();
                (role.clone(), kept)
            })
            .filter(|(_, kids)| !kids.is_empty())
            .collect();
        let (parent, role) = match side_parent.get(sid) {
            None => (ParentRef::Root, String::new()),
            Some((p, r)) => {
                let pref = match matching.left_of(p) {
                    Some(b) => ParentRef::Base(b.to_string()),
                    None => ParentRef::Added(p.to_string()),
                };
                (pref, r.to_string())
            }
        };
        ops.added.push(AddedObject { side_id: sid.to_string(), object: clone, parent, role });
    }

    // Link correspondence as in the diff: association plus mapped endpoints,
    // duplicates paired by count.
    let mut side_keys: BTreeMap<(&str, &str, &str), Vec<&str>> = BTreeMap::new();
    for l in &side.links {
        side_keys
            .entry((l.association.as_str(), l.src.as_str(), l.dst.as_str()))
            .or_default()
            .push(l.id.as_str());
    }
    for ids in side_keys.values_mut() {
        ids.sort();
        ids.reverse();
    }
    for l in &base.links {
        let taken = match (matching.right_of(&l.src), matching.right_of(&l.dst)) {
            (Some(rs), Some(rd)) => side_keys
                .get_mut(&(l.association.as_str(), rs, rd))
                .and_then(|v| v.pop()),
            _ => None,
        };
        if taken.is_none() {
            ops.links_removed.insert(l.id.clone());
        }
    }
    let surviving: BTreeSet<&str> = side_keys.values().flatten().copied().collect();
    for l in &side.links {
        if surviving.contains(l.id.as_str()) {
            ops.links_added.push(l.clone());
        }
    }
    ops.links_added.sort_by(|a, b| a.id.cmp(&b.id));
    ops
}

/// Merges two independently changed models against their common ancestor.
pub fn merge3(
    base: &Model,
    left: &Model,
    right: &Model,
    config: MatchConfig,
) -> Result<MergeResult, DiffError> {
    for side in [left, right] {
        if side.metamodel_name != base.metamodel_name {
            return Err(DiffError::MetamodelMismatch {
                left: base.metamodel_name.clone(),
                right: side.metamodel_name.clone(),
            });
        }
    }
    let lm = match_models(base, left, config)?;
    let rm = match_models(base, right, config)?;
    let lops = extract_ops(base, left, &lm);
    let rops = extract_ops(base, right, &rm);

    let mut conflicts: Vec<Conflict> = Vec::new();

    // delete-change: one side deletes what the other edits or moves.
    let mut kept: BTreeSet<String> = BTreeSet::new();
    for (del_ops, chg_ops, del_side, chg_side) in
        [(&lops, &rops, "left", "right"), (&rops, &lops, "right", "left")]
    {
        for id in &del_ops.deleted {
            if chg_ops.touches(id) {
                kept.insert(id.clone());
                conflicts.push(Conflict {
                    kind: ConflictKind::DeleteChange,
                    base_id: id.clone(),
                    detail: format!(
                        "deleted on {del_side} but changed on {chg_side}; base object kept"
                    ),
                });
            }
        }
    }

    // attr-attr: both sides set the same attribute to different values.
    let mut blocked_attrs: BTreeSet<(String, String)> = BTreeSet::new();
    for (id, ledits) in &lops.edits {
        if let Some(redits) = rops.edits.get(id) {
            for (attr, lval) in ledits {
                if let Some(rval) = redits.get(attr) {
                    if lval != rval {
                        blocked_attrs.insert((id.clone(), attr.clone()));
                        let show = |v: &Option<Literal>| {
                            v.as_ref().map_or("<unset>".to_string(), |l| l.to_string())
                        };
                        conflicts.push(Conflict {
                            kind: ConflictKind::AttrAttr,
                            base_id: id.clone(),
                            detail: format!(
                                "attr `{attr}`: left sets {}, right sets {}; base value kept",
                                show(lval),
                                show(rval)
                            ),
                        });
                    }
                }
            }
        }
    }

    // move-move: divergent reparenting.
    let mut blocked_moves: BTreeSet<String> = BTreeSet::new();
    for (id, ltarget) in &lops.moves {
        if let Some(rtarget) = rops.moves.get(id) {
            if ltarget != rtarget {
                blocked_moves.insert(id.clone());
                conflicts.push(Conflict {
                    kind: ConflictKind::MoveMove,
                    base_id: id.clone(),
                    detail: format!(
                        "moved to {} on left but {} on right; base position kept",
                        ltarget.0.describe(),
                        rtarget.0.describe()
                    ),
                });
            }
        }
    }

    // Build the merged object set from the base.
    let mut objects: BTreeMap<String, MObject> =
        base.objects.iter().map(|o| (o.id.clone(), o.clone())).collect();

    // Attribute edits (delete-change-kept objects stay at base entirely).
    for ops in [&lops, &rops] {
        for (id, edits) in &ops.edits {
            if kept.contains(id) {
                continue;
            }
            let Some(obj) = objects.get_mut(id) else { continue };
            for (attr, value) in edits {
                if blocked_attrs.contains(&(id.clone(), attr.clone())) {
                    continue;
                }
                match value {
                    Some(v) => {
                        obj.attributes.insert(attr.clone(), v.clone());
                    }
                    None => {
                        obj.attributes.remove(attr);
                    }
                }
            }
        }
    }

    // Additions, left first; ids colliding with anything already merged are
    // suffixed with the side tag. Remaps feed the moves and links below.
    let mut lremap: BTreeMap<String, String> = BTreeMap::new();
    let mut rremap: BTreeMap<String, String> = BTreeMap::new();
    for (ops, tag, remap) in [(&lops, "left", &mut lremap), (&rops, "right", &mut rremap)] {
        for add in &ops.added {
            let mut id = add.side_id.clone();
            if objects.contains_key(&id) {
                id = format!("{id}@{tag}");
                let mut n = 2;
                while objects.contains_key(&id) {
                    id = format!("{}@{tag}{n}", add.side_id);
                    n += 1;
                }
            }
            remap.insert(add.side_id.clone(), id.clone());
            let mut obj = add.object.clone();
            obj.id = id.clone();
            // Added children were recorded under side ids; remap the ones
            // already inserted (parents precede children in pre-order).
            for kids in obj.children.values_mut() {
                for kid in kids.iter_mut() {
                    if let Some(mapped) = remap.get(kid) {
                        *kid = mapped.clone();
                    }
                }
            }
            objects.insert(id, obj);
        }
    }

    // Attach added objects to their parents.
    for (ops, remap, side) in [(&lops, &lremap, "left"), (&rops, &rremap, "right")] {
        for add in &ops.added {
            let merged_id = remap[&add.side_id].clone();
            let parent_id = match &add.parent {
                ParentRef::Root => None,
                ParentRef::Base(b) => {
                    if objects.contains_key(b) {
                        Some(b.clone())
                    } else {
                        conflicts.push(Conflict {
                            kind: ConflictKind::DeleteChange,
                            base_id: b.clone(),
                            detail: format!(
                                "object added on {side} under `{b}`, which the other side deleted; added object promoted to root"
                            ),
                        });
                        None
                    }
                }
                ParentRef::Added(p) => remap.get(p).cloned(),
            };
            if let Some(pid) = parent_id {
                // The addition is already linked when its parent was added on
                // the same side (children came along with the parent clone).
                if matches!(add.parent, ParentRef::Base(_)) {
                    let parent = objects.get_mut(&pid).expect("parent exists");
                    parent.children.entry(add.role.clone()).or_default().push(merged_id.clone());
                }
            }
        }
    }

    // Moves.
    for (ops, remap) in [(&lops, &lremap), (&rops, &rremap)] {
        for (id, (target, role)) in &ops.moves {
            if blocked_moves.contains(id) || kept.contains(id) || !objects.contains_key(id) {
                continue;
            }
            let target_id = match target {
                ParentRef::Root => None,
                ParentRef::Base(b) => {
                    if objects.contains_key(b) {
                        Some(b.clone())
                    } else {
                        conflicts.push(Conflict {
                            kind: ConflictKind::DeleteChange,
                            base_id: b.clone(),
                            detail: format!(
                                "object `{id}` moved under `{b}`, which the other side deleted; object promoted to root"
                            ),
                        });
                        None
                    }
                }
                ParentRef::Added(p) => remap.get(p).cloned(),
            };
            // Detach from wherever the object currently sits.
            for obj in objects.values_mut() {
                for kids in obj.children.values_mut() {
                    kids.retain(|k| k != id);
                }
            }
            if let Some(pid) = target_id {
                let parent = objects.get_mut(&pid).expect("move target exists");
                parent.children.entry(role.clone()).or_default().push(id.clone());
            }
        }
    }

    // Deletions: unmatched subtrees are unmatched object by object, so
    // per-object removal covers the cascade. Conflict-kept objects survive.
    for ops in [&lops, &rops] {
        for id in &ops.deleted {
            if kept.contains(id) {
                continue;
            }
            objects.remove(id);
            for obj in objects.values_mut() {
                for kids in obj.children.values_mut() {
                    kids.retain(|k| k != id);
                }
            }
        }
    }
    for obj in objects.values_mut() {
        obj.children.retain(|_, kids| !kids.is_empty());
    }

    // Links: base links minus removals (either side), plus additions with
    // endpoints mapped into merged ids.
    let mut links: Vec<MLink> = base
        .links
        .iter()
        .filter(|l| {
            !lops.links_removed.contains(&l.id)
                && !rops.links_removed.contains(&l.id)
                && objects.contains_key(&l.src)
                && objects.contains_key(&l.dst)
        })
        .cloned()
        .collect();
    let mut link_ids: BTreeSet<String> = links.iter().map(|l| l.id.clone()).collect();
    for (ops, matching, remap, tag) in
        [(&lops, &lm, &lremap, "left"), (&rops, &rm, &rremap, "right")]
    {
        for l in &ops.links_added {
            let map_end = |side_id: &str| -> Option<String> {
                if let Some(b) = matching.left_of(side_id) {
                    objects.contains_key(b).then(|| b.to_string())
                } else {
                    remap.get(side_id).cloned()
                }
            };
            let (Some(src), Some(dst)) = (map_end(&l.src), map_end(&l.dst)) else {
                conflicts.push(Conflict {
                    kind: ConflictKind::DeleteChange,
                    base_id: l.id.clone(),
                    detail: format!(
                        "link `{}` added on {tag} references an object deleted on the other side; link dropped",
                        l.id
                    ),
                });
                continue;
            };
            let mut id = l.id.clone();
            if link_ids.contains(&id) {
                id = format!("{id}@{tag}");
            }
            link_ids.insert(id.clone());
            links.push(MLink { id, association: l.association.clone(), src, dst });
        }
    }

    // Roots are whatever no one contains; orphans of deleted parents float up.
    let contained: BTreeSet<String> = objects
        .values()
        .flat_map(|o| o.child_ids().map(String::from))
        .collect();
    let roots: Vec<String> = objects
        .keys()
        .filter(|id| !contained.contains(*id))
        .cloned()
        .collect();

    let mut merged = Model::new(&base.metamodel_name, &base.metamodel_version);
    merged.objects = objects.into_values().collect();
    merged.links = links;
    merged.roots = roots;
    merged.canonicalize();
    debug_assert!(merged.validate().is_ok());

    conflicts.sort_by(|a, b| a.base_id.cmp(&b.base_id).then_with(|| a.detail.cmp(&b.detail)));
    Ok(MergeResult { merged, conflicts })
}

pub fn render_merge(result: &MergeResult, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(result).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut out = String::new();
            if result.conflicts.is_empty() {
                out.push_str("merge clean: no conflicts\n");
            } else {
                for c in &result.conflicts {
                    out.push_str(&format!("conflict [{}] {}: {}\n", c.kind, c.base_id, c.detail));
                }
                out.push_str(&format!("{} conflict(s)\n", result.conflicts.len()));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use evolvekit_core::{load_model, save_model};

    fn base() -> Model {
        load_model(
            r#"{
              "metamodel": "m", "metamodelVersion": "1",
              "roots": ["a"],
              "objects": [
                {"id": "a", "class": "A", "attrs": {"name": "root"},
                 "children": {"r": ["o1", "o2"]}},
                {"id": "o1", "class": "B", "attrs": {"x": 1, "y": "one"}},
                {"id": "o2", "class": "B", "attrs": {"x": 2, "y": "two"}}
              ],
              "links": [{"id": "l1", "assoc": "L", "src": "o1", "dst": "o2"}]
            }"#,
        )
        .unwrap()
    }

    fn merge(b: &Model, l: &Model, r: &Model) -> MergeResult {
        merge3(b, l, r, MatchConfig::default()).unwrap()
    }

    #[test]
    fn merging_identical_models_is_identity() {
        let b = base();
        let result = merge(&b, &b.clone(), &b.clone());
        assert!(result.conflicts.is_empty());
        assert_eq!(save_model(&result.merged), save_model(&b));
    }

    #[test]
    fn disjoint_edits_both_apply() {
        let b = base();
        let mut l = base();
        l.object_mut("o1").unwrap().attributes.insert("x".into(), Literal::Int(10));
        let mut r = base();
        r.object_mut("o2").unwrap().attributes.insert("y".into(), Literal::Str("TWO".into()));
        let result = merge(&b, &l, &r);
        assert!(result.conflicts.is_empty(), "{:?}", result.conflicts);
        let merged = &result.merged;
        assert_eq!(merged.object("o1").unwrap().attributes["x"], Literal::Int(10));
        assert_eq!(merged.object("o2").unwrap().attributes["y"], Literal::Str("TWO".into()));
    }

    #[test]
    fn divergent_same_attribute_edits_conflict_and_keep_base() {
        let b = base();
        let mut l = base();
        l.object_mut("o1").unwrap().attributes.insert("x".into(), Literal::Int(10));
        let mut r = base();
        r.object_mut("o1").unwrap().attributes.insert("x".into(), Literal::Int(20));
        let result = merge(&b, &l, &r);
        assert_eq!(result.conflicts.len(), 1);
        assert_eq!(result.conflicts[0].kind, ConflictKind::AttrAttr);
        assert_eq!(result.conflicts[0].base_id, "o1");
        assert!(result.conflicts[0].detail.contains("10"));
        assert!(result.conflicts[0].detail.contains("20"));
        assert_eq!(result.merged.object("o1").unwrap().attributes["x"], Literal::Int(1));
    }

    #[test]
    fn agreeing_edits_do_not_conflict() {
        let b = base();
        let mut l = base();
        l.object_mut("o1").unwrap().attributes.insert("x".into(), Literal::Int(7));
        let r = l.clone();
        let result = merge(&b, &l, &r);
        assert!(result.conflicts.is_empty());
        assert_eq!(result.merged.object("o1").unwrap().attributes["x"], Literal::Int(7));
    }

    #[test]
    fn deletion_against_untouched_object_applies() {
        let b = base();
        let mut l = base();
        l.objects.retain(|o| o.id != "o2");
        l.object_mut("a").unwrap().children.get_mut("r").unwrap().retain(|k| k != "o2");
        l.links.clear();
        let r = base();
        let result = merge(&b, &l, &r);
        assert!(result.conflicts.is_empty(), "{:?}", result.conflicts);
        assert!(result.merged.object("o2").is_none());
        assert!(result.merged.links.is_empty());
    }

    #[test]
    fn delete_vs_edit_conflicts_and_keeps_base_object() {
        let b = base();
        let mut l = base();
        l.objects.retain(|o| o.id != "o2");
        l.object_mut("a").unwrap().children.get_mut("r").unwrap().retain(|k| k != "o2");
        l.links.clear();
        let mut r = base();
        r.object_mut("o2").unwrap().attributes.insert("x".into(), Literal::Int(99));
        let result = merge(&b, &l, &r);
        assert!(result
            .conflicts
            .iter()
            .any(|c| c.kind == ConflictKind::DeleteChange && c.base_id == "o2"));
        let o2 = result.merged.object("o2").expect("kept");
        assert_eq!(o2.attributes["x"], Literal::Int(2), "base value retained");
    }

    #[test]
    fn additions_from_both_sides_are_carried_over() {
        let b = base();
        let mut l = base();
        l.objects.push(MObject::new("n_left", "B"));
        l.object_mut("a").unwrap().children.get_mut("r").unwrap().push("n_left".into());
        let mut r = base();
        r.objects.push(MObject::new("n_right", "B"));
        r.roots.push("n_right".into());
        let result = merge(&b, &l, &r);
        assert!(result.conflicts.is_empty(), "{:?}", result.conflicts);
        assert!(result.merged.object("n_left").is_some());
        assert!(result.merged.object("n_right").is_some());
        assert!(result.merged.roots.contains(&"n_right".to_string()));
        let a = result.merged.object("a").unwrap();
        assert!(a.children["r"].contains(&"n_left".to_string()));
    }

    #[test]
    fn colliding_added_ids_are_renamed() {
        let b = base();
        let mut l = base();
        let mut fresh_l = MObject::new("new", "B");
        fresh_l.attributes.insert("x".into(), Literal::Int(1));
        l.objects.push(fresh_l);
        l.roots.push("new".into());
        let mut r = base();
        let mut fresh_r = MObject::new("new", "B");
        fresh_r.attributes.insert("x".into(), Literal::Int(2000));
        r.objects.push(fresh_r);
        r.roots.push("new".into());
        let result = merge(&b, &l, &r);
        // Both additions survive under distinct ids.
        let count = result
            .merged
            .objects
            .iter()
            .filter(|o| o.id == "new" || o.id.starts_with("new@"))
            .count();
        assert_eq!(count, 2, "{:?}", result.merged.objects);
        assert!(result.merged.validate().is_ok());
    }

    #[test]
    fn move_vs_move_conflicts_keep_base_position() {
        let mut b = base();
        b.objects.push(MObject::new("a2", "A"));
        b.roots.push("a2".into());
        b.canonicalize();
        // left moves o1 under a2; right moves o1 to root.
        let mut l = b.clone();
        l.object_mut("a").unwrap().children.get_mut("r").unwrap().retain(|k| k != "o1");
        l.object_mut("a2").unwrap().children.insert("r".into(), vec!["o1".into()]);
        let mut r = b.clone();
        r.object_mut("a").unwrap().children.get_mut("r").unwrap().retain(|k| k != "o1");
        r.roots.push("o1".into());
        let result = merge(&b, &l, &r);
        assert!(result.conflicts.iter().any(|c| c.kind == ConflictKind::MoveMove));
        // Base position: still under a.
        let a = result.merged.object("a").unwrap();
        assert!(a.children["r"].contains(&"o1".to_string()));
    }

    #[test]
    fn single_side_move_applies() {
        let b = base();
        let mut l = base();
        l.object_mut("a").unwrap().children.get_mut("r").unwrap().retain(|k| k != "o1");
        l.object_mut("o2").unwrap().children.insert("r".into(), vec!["o1".into()]);
        let r = base();
        let result = merge(&b, &l, &r);
        assert!(result.conflicts.is_empty(), "{:?}", result.conflicts);
        let o2 = result.merged.object("o2").unwrap();
        assert!(o2.children["r"].contains(&"o1".to_string()));
    }
}
