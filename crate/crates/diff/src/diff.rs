//! Structural diff of two models over a matching.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use evolvekit_core::{Literal, Model};

use crate::matcher::Matching;
use crate::ReportFormat;

#[derive(Debug, Clone, Serialize)]
pub struct AttrChange {
    pub left: String,
    pub right: String,
    pub attr: String,
    pub old: Option<Literal>,
    pub new: Option<Literal>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Move {
    pub left: String,
    pub right: String,
    pub old_parent: Option<String>,
    pub new_parent: Option<String>,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct DiffReport {
    /// Right-only object ids.
    pub added: Vec<String>,
    /// Left-only object ids.
    pub removed: Vec<String>,
    pub changed: Vec<AttrChange>,
    pub moved: Vec<Move>,
    pub link_added: Vec<String>,
    pub link_removed: Vec<String>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty()
            && self.removed.is_empty()
            && self.changed.is_empty()
            && self.moved.is_empty()
            && self.link_added.is_empty()
            && self.link_removed.is_empty()
    }
}

/// Computes the difference between two models given a matching produced from
/// them. Unmatched left objects are removals, unmatched right objects are
/// additions, matched pairs contribute attribute changes and moves. All
/// entries are in deterministic (id-sorted) order.
pub fn diff_models(left: &Model, right: &Model, matching: &Matching) -> DiffReport {
    let mut report = DiffReport::default();

    let matched_left: BTreeSet<&str> = matching.pairs.iter().map(|p| p.left.as_str()).collect();
    let matched_right: BTreeSet<&str> = matching.pairs.iter().map(|p| p.right.as_str()).collect();

    report.removed = left
        .objects
        .iter()
        .filter(|o| !matched_left.contains(o.id.as_str()))
        .map(|o| o.id.clone())
        .collect();
    report.removed.sort();
    report.added = right
        .objects
        .iter()
        .filter(|o| !matched_right.contains(o.id.as_str()))
        .map(|o| o.id.clone())
        .collect();
    report.added.sort();

    let left_parent = left.parent_map();
    let right_parent = right.parent_map();

    let mut pairs: Vec<(&str, &str)> = matching
        .pairs
        .iter()
        .map(|p| (p.left.as_str(), p.right.as_str()))
        .collect();
    pairs.sort();
    for (lid, rid) in &pairs {
        let (Some(lo), Some(ro)) = (left.object(lid), right.object(rid)) else { continue };
        let names: BTreeSet<&str> = lo
            .attributes
            .keys()
            .chain(ro.attributes.keys())
            .map(|s| s.as_str())
            .collect();
        for name in names {
            let old = lo.attributes.get(name);
            let new = ro.attributes.get(name);
            if old != new {
                report.changed.push(AttrChange {
                    left: lid.to_string(),
                    right: rid.to_string(),
                    attr: name.to_string(),
                    old: old.cloned(),
                    new: new.cloned(),
                });
            }
        }

        // Moved iff the right parent is not the image of the left parent.
        let lp = left_parent.get(lid).map(|(p, _)| *p);
        let rp = right_parent.get(rid).map(|(p, _)| *p);
        let expected_rp = lp.and_then(|p| matching.right_of(p));
        if expected_rp != rp {
            report.moved.push(Move {
                left: lid.to_string(),
                right: rid.to_string(),
                old_parent: lp.map(String::from),
                new_parent: rp.map(String::from),
            });
        }
    }

    // A left link corresponds to a right link when the association matches
    // and both endpoint images agree. Parallel duplicates pair up by count.
    let mut right_keys: BTreeMap<(&str, &str, &str), Vec<&str>> = BTreeMap::new();
    for l in &right.links {
        right_keys
            .entry((l.association.as_str(), l.src.as_str(), l.dst.as_str()))
            .or_default()
            .push(l.id.as_str());
    }
    for ids in right_keys.values_mut() {
        ids.sort();
        ids.reverse(); // pop() yields smallest id first
    }
    for l in &left.links {
        let key = (
            matching.right_of(&l.src),
            matching.right_of(&l.dst),
        );
        let taken = match key {
            (Some(rs), Some(rd)) => right_keys
                .get_mut(&(l.association.as_str(), rs, rd))
                .and_then(|v| v.pop()),
            _ => None,
        };
        if taken.is_none() {
            report.link_removed.push(l.id.clone());
        }
    }
    report.link_added = right_keys.values().flatten().map(|s| s.to_string()).collect();
    report.link_removed.sort();
    report.link_added.sort();

    report
}

pub fn render_diff(report: &DiffReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut out = String::new();
            for id in &report.added {
                out.push_str(&format!("added object {id}\n"));
            }
            for id in &report.removed {
                out.push_str(&format!("removed object {id}\n"));
            }
            for c in &report.changed {
                let old = c.old.as_ref().map_or("<unset>".into(), |l| l.to_string());
                let new = c.new.as_ref().map_or("<unset>".into(), |l| l.to_string());
                out.push_str(&format!(
                    "changed {}/{} attr {}: {} -> {}\n",
                    c.left, c.right, c.attr, old, new
                ));
            }
            for m in &report.moved {
                out.push_str(&format!(
                    "moved {}/{}: parent {} -> {}\n",
                    m.left,
                    m.right,
                    m.old_parent.as_deref().unwrap_or("<root>"),
                    m.new_parent.as_deref().unwrap_or("<root>")
                ));
            }
            for id in &report.link_added {
                out.push_str(&format!("added link {id}\n"));
            }
            for id in &report.link_removed {
                out.push_str(&format!("removed link {id}\n"));
            }
            if report.is_empty() {
                out.push_str("models are identical under the matching\n");
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::{match_models, MatchConfig};
    use evolvekit_core::load_model;

    fn base() -> Model {
        load_model(
            r#"{
              "metamodel": "m", "metamodelVersion": "1",
              "roots": ["a"],
              "objects": [
                {"id": "a", "class": "A", "attrs": {"name": "root"},
                 "children": {"r": ["b", "c"]}},
                {"id": "b", "class": "B", "attrs": {"name": "bee", "n": 1}},
                {"id": "c", "class": "B", "attrs": {"name": "sea", "n": 2}}
              ],
              "links": [{"id": "l1", "assoc": "L", "src": "b", "dst": "c"}]
            }"#,
        )
        .unwrap()
    }

    fn diff_of(left: &Model, right: &Model) -> DiffReport {
        let matching = match_models(left, right, MatchConfig::default()).unwrap();
        diff_models(left, right, &matching)
    }

    #[test]
    fn self_diff_is_empty() {
        let m = base();
        assert!(diff_of(&m, &m).is_empty());
    }

    #[test]
    fn single_attribute_edit_is_one_changed_entry() {
        // Oracle: objects share ids, so the edited object is findable by id.
        let left = base();
        let mut right = base();
        right.object_mut("b").unwrap().attributes.insert("n".into(), Literal::Int(9));
        let report = diff_of(&left, &right);
        assert_eq!(report.changed.len(), 1, "{report:?}");
        assert_eq!(report.changed[0].left, "b");
        assert_eq!(report.changed[0].attr, "n");
        assert_eq!(report.changed[0].old, Some(Literal::Int(1)));
        assert_eq!(report.changed[0].new, Some(Literal::Int(9)));
        assert!(report.added.is_empty() && report.removed.is_empty());
    }

    #[test]
    fn deleting_an_object_removes_it_and_its_links() {
        let left = base();
        let mut right = base();
        right.objects.retain(|o| o.id != "c");
        right.object_mut("a").unwrap().children.get_mut("r").unwrap().retain(|k| k != "c");
        right.links.clear();
        let report = diff_of(&left, &right);
        assert_eq!(report.removed, vec!["c".to_string()]);
        assert_eq!(report.link_removed, vec!["l1".to_string()]);
        assert!(report.added.is_empty());
        assert!(report.changed.is_empty());
    }

    #[test]
    fn move_is_detected_via_parent_images() {
        let left = base();
        let mut right = base();
        // b moves from a to c.
        right.object_mut("a").unwrap().children.get_mut("r").unwrap().retain(|k| k != "b");
        right.object_mut("c").unwrap().children.insert("r".into(), vec!["b".into()]);
        let report = diff_of(&left, &right);
        assert_eq!(report.moved.len(), 1);
        assert_eq!(report.moved[0].left, "b");
        assert_eq!(report.moved[0].old_parent.as_deref(), Some("a"));
        assert_eq!(report.moved[0].new_parent.as_deref(), Some("c"));
    }

    #[test]
    fn added_link_is_reported() {
        let left = base();
        let mut right = base();
        right.links.push(evolvekit_core::MLink {
            id: "l2".into(),
            association: "L".into(),
            src: "c".into(),
            dst: "b".into(),
        });
        let report = diff_of(&left, &right);
        assert_eq!(report.link_added, vec!["l2".to_string()]);
        assert!(report.link_removed.is_empty());
    }
}
