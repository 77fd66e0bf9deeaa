//! Fixed-point similarity matching.
//!
//! Starting from pairwise attribute similarity of same-class objects, each
//! round blends in how similar the neighborhoods look under the previous
//! round's scores:
//!
//! ```text
//! s0(a,b)     = attrSim(a,b)                      for same-class pairs
//! s_t+1(a,b)  = (1-alpha) * attrSim(a,b) + alpha * neighborSim(s_t, a, b)
//! ```
//!
//! `neighborSim` averages the parent agreement, the best one-to-one pairing
//! of children (per containment role), and the best one-to-one pairing of
//! link neighbors (per association and direction). A facet where both
//! objects have nothing is skipped; if every facet is skipped the score
//! stays at the attribute similarity. Iteration stops when no score moves
//! by more than `epsilon`, then pairs are selected greedily by descending
//! score with lexicographic tie-breaks, accepting only scores >= theta.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use evolvekit_core::{Literal, MObject, Model};

use crate::error::DiffError;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MatchConfig {
    /// Neighborhood propagation weight.
    pub alpha: f64,
    /// Acceptance threshold for pairs.
    pub theta: f64,
    /// Convergence bound on the max score change per round.
    pub epsilon: f64,
    pub max_iter: u32,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { alpha: 0.5, theta: 0.6, epsilon: 1e-3, max_iter: 100 }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), DiffError> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(self.alpha) {
            return Err(DiffError::BadConfig(format!("alpha {} outside [0,1]", self.alpha)));
        }
        if !in_unit(self.theta) {
            return Err(DiffError::BadConfig(format!("theta {} outside [0,1]", self.theta)));
        }
        if self.epsilon <= 0.0 || self.epsilon.is_nan() {
            return Err(DiffError::BadConfig("epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchPair {
    pub left: String,
    pub right: String,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Matching {
    pub pairs: Vec<MatchPair>,
    pub config: MatchConfig,
}

impl Matching {
    pub fn right_of(&self, left: &str) -> Option<&str> {
        self.pairs.iter().find(|p| p.left == left).map(|p| p.right.as_str())
    }

    pub fn left_of(&self, right: &str) -> Option<&str> {
        self.pairs.iter().find(|p| p.right == right).map(|p| p.left.as_str())
    }
}

/// Levenshtein distance in characters.
fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn literal_similarity(a: &Literal, b: &Literal) -> f64 {
    match (a, b) {
        (Literal::Str(x), Literal::Str(y)) => {
            let max = x.chars().count().max(y.chars().count());
            if max == 0 {
                1.0
            } else {
                1.0 - edit_distance(x, y) as f64 / max as f64
            }
        }
        _ => {
            if a == b {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Mean per-attribute similarity over the union of attribute names.
/// Strings score by normalized edit distance, other types by equality;
/// an attribute present on only one side scores 0. Two objects without
/// attributes score 1.
pub fn attr_similarity(a: &MObject, b: &MObject) -> f64 {
    let names: BTreeSet<&str> = a
        .attributes
        .keys()
        .chain(b.attributes.keys())
        .map(|s| s.as_str())
        .collect();
    if names.is_empty() {
        return 1.0;
    }
    let mut total = 0.0;
    for name in &names {
        total += match (a.attributes.get(*name), b.attributes.get(*name)) {
            (Some(x), Some(y)) => literal_similarity(x, y),
            _ => 0.0,
        };
    }
    total / names.len() as f64
}

struct Side<'a> {
    objects: Vec<&'a MObject>,
    parent: Vec<Option<usize>>,
    /// Children indices per containment role.
    children: Vec<BTreeMap<&'a str, Vec<usize>>>,
    /// Link neighbors grouped by (association, outgoing?).
    neighbors: Vec<BTreeMap<(&'a str, bool), Vec<usize>>>,
    child_total: Vec<usize>,
    neighbor_total: Vec<usize>,
}

impl<'a> Side<'a> {
    fn build(model: &'a Model) -> Self {
        let mut objects: Vec<&MObject> = model.objects.iter().collect();
        objects.sort_by(|a, b| a.id.cmp(&b.id));
        let index: BTreeMap<&str, usize> =
            objects.iter().enumerate().map(|(i, o)| (o.id.as_str(), i)).collect();
        let mut parent = vec![None; objects.len()];
        let mut children: Vec<BTreeMap<&str, Vec<usize>>> =
            vec![BTreeMap::new(); objects.len()];
        for (pi, obj) in objects.iter().enumerate() {
            for (role, kids) in &obj.children {
                for kid in kids {
                    if let Some(&ki) = index.get(kid.as_str()) {
                        parent[ki] = Some(pi);
                        children[pi].entry(role.as_str()).or_default().push(ki);
                    }
                }
            }
        }
        let mut neighbors: Vec<BTreeMap<(&str, bool), Vec<usize>>> =
            vec![BTreeMap::new(); objects.len()];
        for link in &model.links {
            if let (Some(&si), Some(&di)) =
                (index.get(link.src.as_str()), index.get(link.dst.as_str()))
            {
                neighbors[si].entry((link.association.as_str(), true)).or_default().push(di);
                neighbors[di].entry((link.association.as_str(), false)).or_default().push(si);
            }
        }
        let child_total = children.iter().map(|m| m.values().map(Vec::len).sum()).collect();
        let neighbor_total = neighbors.iter().map(|m| m.values().map(Vec::len).sum()).collect();
        Side { objects, parent, children, neighbors, child_total, neighbor_total }
    }
}

struct Scores {
    /// Candidate (left, right) pairs restricted to equal classes, in
    /// (left id, right id) order.
    pairs: Vec<(usize, usize)>,
    lookup: BTreeMap<(usize, usize), usize>,
    values: Vec<f64>,
}

impl Scores {
    fn get(&self, l: usize, r: usize) -> f64 {
        self.lookup.get(&(l, r)).map_or(0.0, |&k| self.values[k])
    }
}

/// Best one-to-one pairing value between two groups under previous scores:
/// greedy by descending score, deterministic tie-breaks. Groups are
/// multisets (parallel links repeat a neighbor), so occurrences pair up
/// individually.
fn best_pairing_sum(scores: &Scores, left: &[usize], right: &[usize]) -> f64 {
    let mut candidates: Vec<(f64, usize, usize, usize, usize)> = Vec::new();
    for (i, &l) in left.iter().enumerate() {
        for (j, &r) in right.iter().enumerate() {
            let s = scores.get(l, r);
            if s > 0.0 {
                candidates.push((s, l, r, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
            .then_with(|| a.3.cmp(&b.3))
            .then_with(|| a.4.cmp(&b.4))
    });
    let mut used_l = vec![false; left.len()];
    let mut used_r = vec![false; right.len()];
    let mut sum = 0.0;
    for (s, _, _, i, j) in candidates {
        if !used_l[i] && !used_r[j] {
            used_l[i] = true;
            used_r[j] = true;
            sum += s;
        }
    }
    sum
}

fn neighbor_similarity(
    left: &Side,
    right: &Side,
    scores: &Scores,
    li: usize,
    ri: usize,
    attr_sim: f64,
) -> f64 {
    let mut facets: Vec<f64> = Vec::new();

    match (left.parent[li], right.parent[ri]) {
        (None, None) => {}
        (Some(lp), Some(rp)) => facets.push(scores.get(lp, rp)),
        _ => facets.push(0.0),
    }

    let (lc, rc) = (left.child_total[li], right.child_total[ri]);
    if lc + rc > 0 {
        let mut sum = 0.0;
        let roles: BTreeSet<&str> = left.children[li]
            .keys()
            .chain(right.children[ri].keys())
            .copied()
            .collect();
        for role in roles {
            let empty = Vec::new();
            let lg = left.children[li].get(role).unwrap_or(&empty);
            let rg = right.children[ri].get(role).unwrap_or(&empty);
            sum += best_pairing_sum(scores, lg, rg);
        }
        facets.push(sum / lc.max(rc) as f64);
    }

    let (ln, rn) = (left.neighbor_total[li], right.neighbor_total[ri]);
    if ln + rn > 0 {
        let mut sum = 0.0;
        let keys: BTreeSet<(&str, bool)> = left.neighbors[li]
            .keys()
            .chain(right.neighbors[ri].keys())
            .copied()
            .collect();
        for key in keys {
            let empty = Vec::new();
            let lg = left.neighbors[li].get(&key).unwrap_or(&empty);
            let rg = right.neighbors[ri].get(&key).unwrap_or(&empty);
            sum += best_pairing_sum(scores, lg, rg);
        }
        facets.push(sum / ln.max(rn) as f64);
    }

    if facets.is_empty() {
        attr_sim
    } else {
        facets.iter().sum::<f64>() / facets.len() as f64
    }
}

/// Matches two models of the same metamodel. Matched objects always share a
/// class; every score lies in [0,1].
pub fn match_models(
    left: &Model,
    right: &Model,
    config: MatchConfig,
) -> Result<Matching, DiffError> {
    config.validate()?;
    if left.metamodel_name != right.metamodel_name {
        return Err(DiffError::MetamodelMismatch {
            left: left.metamodel_name.clone(),
            right: right.metamodel_name.clone(),
        });
    }

    let ls = Side::build(left);
    let rs = Side::build(right);

    let mut pairs = Vec::new();
    for (li, lo) in ls.objects.iter().enumerate() {
        for (ri, ro) in rs.objects.iter().enumerate() {
            if lo.class_name == ro.class_name {
                pairs.push((li, ri));
            }
        }
    }
    let lookup: BTreeMap<(usize, usize), usize> =
        pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let attr_sims: Vec<f64> = pairs
        .iter()
        .map(|&(li, ri)| attr_similarity(ls.objects[li], rs.objects[ri]))
        .collect();

    let mut scores = Scores { pairs, lookup, values: attr_sims.clone() };

    for _ in 0..config.max_iter {
        let mut next = Vec::with_capacity(scores.values.len());
        let mut max_delta: f64 = 0.0;
        for (k, &(li, ri)) in scores.pairs.iter().enumerate() {
            let ns = neighbor_similarity(&ls, &rs, &scores, li, ri, attr_sims[k]);
            let v = (1.0 - config.alpha) * attr_sims[k] + config.alpha * ns;
            max_delta = max_delta.max((v - scores.values[k]).abs());
            next.push(v);
        }
        scores.values = next;
        if max_delta < config.epsilon {
            break;
        }
    }

    // Greedy selection: descending score, then (left id, right id).
    let mut order: Vec<usize> = (0..scores.pairs.len()).collect();
    order.sort_by(|&a, &b| {
        scores.values[b]
            .partial_cmp(&scores.values[a])
            .unwrap()
            .then_with(|| {
                let (la, ra) = scores.pairs[a];
                let (lb, rb) = scores.pairs[b];
                ls.objects[la]
                    .id
                    .cmp(&ls.objects[lb].id)
                    .then_with(|| rs.objects[ra].id.cmp(&rs.objects[rb].id))
            })
    });
    let mut used_l = vec![false; ls.objects.len()];
    let mut used_r = vec![false; rs.objects.len()];
    let mut selected = Vec::new();
    for k in order {
        let (li, ri) = scores.pairs[k];
        if scores.values[k] < config.theta {
            break;
        }
        if !used_l[li] && !used_r[ri] {
            used_l[li] = true;
            used_r[ri] = true;
            selected.push(MatchPair {
                left: ls.objects[li].id.clone(),
                right: rs.objects[ri].id.clone(),
                score: scores.values[k],
            });
        }
    }
    selected.sort_by(|a, b| a.left.cmp(&b.left));
    Ok(Matching { pairs: selected, config })
}

#[cfg(test)]
mod tests {
    use super::*;
    use evolvekit_core::load_model;

    fn single(attr: &str) -> Model {
        load_model(&format!(
            r#"{{"metamodel":"m","metamodelVersion":"1","roots":["o1"],
                "objects":[{{"id":"o1","class":"A","attrs":{{"s":"{attr}"}}}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn self_match_is_identity_with_score_one() {
        let m = load_model(
            r#"{
              "metamodel": "m", "metamodelVersion": "1",
              "roots": ["a"],
              "objects": [
                {"id": "a", "class": "A", "attrs": {"x": 1},
                 "children": {"r": ["b", "c"]}},
                {"id": "b", "class": "B", "attrs": {"x": 2}},
                {"id": "c", "class": "B", "attrs": {"x": 3}}
              ],
              "links": [{"id": "l", "assoc": "L", "src": "b", "dst": "c"}]
            }"#,
        )
        .unwrap();
        let matching = match_models(&m, &m, MatchConfig::default()).unwrap();
        assert_eq!(matching.pairs.len(), 3);
        for p in &matching.pairs {
            assert_eq!(p.left, p.right);
            assert!((p.score - 1.0).abs() < 1e-9, "{} scored {}", p.left, p.score);
        }
    }

    #[test]
    fn near_string_match_scores_normalized_edit_distance() {
        // Hand oracle: edit distance 1 over max length 3 -> 1 - 1/3.
        let expected = 1.0 - 1.0 / 3.0;
        let left = single("abc");
        let right = single("abd");
        assert!(
            (attr_similarity(&left.objects[0], &right.objects[0]) - expected).abs() < 1e-9
        );
        let matching = match_models(&left, &right, MatchConfig::default()).unwrap();
        assert_eq!(matching.pairs.len(), 1);
        assert!((matching.pairs[0].score - expected).abs() < 1e-9);
    }

    #[test]
    fn disjoint_attributes_score_zero_and_stay_unmatched() {
        let left = load_model(
            r#"{"metamodel":"m","metamodelVersion":"1","roots":["a"],
                "objects":[{"id":"a","class":"A","attrs":{"x":"p"}}]}"#,
        )
        .unwrap();
        let right = load_model(
            r#"{"metamodel":"m","metamodelVersion":"1","roots":["b"],
                "objects":[{"id":"b","class":"A","attrs":{"y":"q"}}]}"#,
        )
        .unwrap();
        assert_eq!(attr_similarity(&left.objects[0], &right.objects[0]), 0.0);
        let matching = match_models(&left, &right, MatchConfig::default()).unwrap();
        assert!(matching.pairs.is_empty());
    }

    #[test]
    fn different_classes_never_match() {
        let left = load_model(
            r#"{"metamodel":"m","metamodelVersion":"1","roots":["a"],
                "objects":[{"id":"a","class":"A","attrs":{"x":1}}]}"#,
        )
        .unwrap();
        let right = load_model(
            r#"{"metamodel":"m","metamodelVersion":"1","roots":["a"],
                "objects":[{"id":"a","class":"B","attrs":{"x":1}}]}"#,
        )
        .unwrap();
        let matching = match_models(&left, &right, MatchConfig::default()).unwrap();
        assert!(matching.pairs.is_empty());
    }

    #[test]
    fn metamodel_mismatch_is_an_error() {
        let left = single("x");
        let mut right = single("x");
        right.metamodel_name = "other".into();
        assert!(match_models(&left, &right, MatchConfig::default()).is_err());
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let left = load_model(
            r#"{"metamodel":"m","metamodelVersion":"1","roots":["a","b"],
                "objects":[{"id":"a","class":"A","attrs":{"s":"hello"}},
                           {"id":"b","class":"A","attrs":{"s":"help"}}]}"#,
        )
        .unwrap();
        let right = load_model(
            r#"{"metamodel":"m","metamodelVersion":"1","roots":["c","d"],
                "objects":[{"id":"c","class":"A","attrs":{"s":"hallo"}},
                           {"id":"d","class":"A","attrs":{"s":"yelp"}}]}"#,
        )
        .unwrap();
        let cfg = MatchConfig { theta: 0.0, ..Default::default() };
        let matching = match_models(&left, &right, cfg).unwrap();
        for p in &matching.pairs {
            assert!((0.0..=1.0).contains(&p.score));
        }
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance("", ""), 0);
        assert_eq!(edit_distance("abc", "abc"), 0);
        assert_eq!(edit_distance("abc", "abd"), 1);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
    }
}
