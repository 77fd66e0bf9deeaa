//! Hierarchical statechart flattening with a trace-equivalence oracle.
//!
//! Flattening keeps only leaf states. A transition on a composite state is
//! replicated onto each leaf descendant that has no closer transition on the
//! same event (innermost overrides), and a transition into a composite state
//! is redirected to its recursively-initial leaf. `simulate` runs both
//! hierarchical and flat machines, so equivalence is checkable directly.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use evolvekit_core::{
    check_conformance, load_metamodel, Literal, MLink, MObject, Metamodel, Model,
};

use crate::error::RefactorError;

static STATECHART_MM: LazyLock<Metamodel> = LazyLock::new(|| {
    load_metamodel(include_str!("../../../builtin/statechart.mm.json"))
        .expect("builtin statechart metamodel is well-formed")
});

/// The built-in hierarchical statechart metamodel (`builtin/statechart.mm.json`).
pub fn statechart_metamodel() -> &'static Metamodel {
    &STATECHART_MM
}

/// The evolved, hierarchy-free variant: states can no longer contain states.
pub fn flat_statechart_metamodel() -> Metamodel {
    let mut mm = STATECHART_MM.clone();
    mm.version = "1-flat".into();
    for class in &mut mm.classes {
        if class.name == "State" {
            class.containments.clear();
        }
    }
    mm.validate().expect("flat variant stays well-formed");
    mm
}

struct Transition {
    id: String,
    event: String,
    source: String,
    target: String,
}

struct Chart<'a> {
    model: &'a Model,
    /// state id -> parent state id
    parent: BTreeMap<&'a str, &'a str>,
    /// state id -> child state ids (role `states`)
    children: BTreeMap<&'a str, Vec<&'a str>>,
    transitions: Vec<Transition>,
    /// source state id -> indices into `transitions`, id-sorted
    by_source: BTreeMap<String, Vec<usize>>,
    root_initial: String,
}

impl<'a> Chart<'a> {
    fn build(model: &'a Model) -> Result<Self, RefactorError> {
        let ill = |msg: String| RefactorError::IllformedStatechart(msg);
        let report = check_conformance(model, statechart_metamodel());
        if !report.conformant() {
            return Err(ill(format!(
                "model violates the statechart metamodel: {}",
                report.violations[0].message
            )));
        }

        let mut parent = BTreeMap::new();
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for obj in &model.objects {
            if obj.class_name != "State" {
                continue;
            }
            if let Some(kids) = obj.children.get("states") {
                for kid in kids {
                    parent.insert(kid.as_str(), obj.id.as_str());
                }
                children.insert(obj.id.as_str(), kids.iter().map(|s| s.as_str()).collect());
            }
        }

        let is_initial = |id: &str| {
            model.object(id).and_then(|o| o.attributes.get("initial"))
                == Some(&Literal::Bool(true))
        };

        // Exactly one initial state at the root level and per composite.
        let root_states: Vec<&str> = model
            .roots
            .iter()
            .map(|s| s.as_str())
            .filter(|id| model.object(id).is_some_and(|o| o.class_name == "State"))
            .collect();
        let root_initials: Vec<&str> =
            root_states.iter().copied().filter(|id| is_initial(id)).collect();
        let [root_initial] = root_initials.as_slice() else {
            return Err(ill(format!(
                "expected exactly one initial root state, found {}",
                root_initials.len()
            )));
        };
        for (composite, kids) in &children {
            let n = kids.iter().filter(|k| is_initial(k)).count();
            if n != 1 {
                return Err(ill(format!(
                    "composite state `{composite}` has {n} initial children, expected 1"
                )));
            }
        }

        // Transitions: one source link and one target link each (guaranteed
        // by the metamodel multiplicities).
        let mut transitions = Vec::new();
        for obj in &model.objects {
            if obj.class_name != "Transition" {
                continue;
            }
            let end = |assoc: &str| {
                model
                    .links
                    .iter()
                    .find(|l| l.association == assoc && l.src == obj.id)
                    .map(|l| l.dst.clone())
                    .ok_or_else(|| ill(format!("transition `{}` lacks a {assoc} link", obj.id)))
            };
            let Some(Literal::Str(event)) = obj.attributes.get("event") else {
                return Err(ill(format!("transition `{}` lacks an event", obj.id)));
            };
            transitions.push(Transition {
                id: obj.id.clone(),
                event: event.clone(),
                source: end("source")?,
                target: end("target")?,
            });
        }
        transitions.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_source: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, t) in transitions.iter().enumerate() {
            by_source.entry(t.source.clone()).or_default().push(i);
        }

        Ok(Chart {
            model,
            parent,
            children,
            transitions,
            by_source,
            root_initial: root_initial.to_string(),
        })
    }

    fn is_leaf(&self, id: &str) -> bool {
        self.children.get(id).is_none_or(|k| k.is_empty())
    }

    fn leaves(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .model
            .objects
            .iter()
            .filter(|o| o.class_name == "State" && self.is_leaf(&o.id))
            .map(|o| o.id.as_str())
            .collect();
        out.sort_unstable();
        out
    }

    /// Descends through initial children until a leaf.
    fn initial_leaf(&self, state: &str) -> String {
        let mut cur = state.to_string();
        loop {
            let Some(kids) = self.children.get(cur.as_str()) else { return cur };
            if kids.is_empty() {
                return cur;
            }
            let next = kids
                .iter()
                .find(|k| {
                    self.model.object(k).and_then(|o| o.attributes.get("initial"))
                        == Some(&Literal::Bool(true))
                })
                .expect("validated: one initial child per composite");
            cur = next.to_string();
        }
    }

    /// Ancestor-or-self chain from a state to its root, innermost first.
    fn chain(&self, state: &str) -> Vec<&'a str> {
        let mut out = Vec::new();
        let mut cur: Option<&'a str> = self.model.object(state).map(|o| o.id.as_str());
        while let Some(id) = cur {
            out.push(id);
            cur = self.parent.get(id).copied();
        }
        out
    }

    /// Transitions on `event` owned by the innermost ancestor-or-self of
    /// `leaf` that has any; empty when no ancestor reacts.
    fn effective(&self, leaf: &str, event: &str) -> (Option<String>, Vec<&Transition>) {
        for state in self.chain(leaf) {
            let matching: Vec<&Transition> = self
                .by_source
                .get(state)
                .map(|idxs| {
                    idxs.iter()
                        .map(|&i| &self.transitions[i])
                        .filter(|t| t.event == event)
                        .collect()
                })
                .unwrap_or_default();
            if !matching.is_empty() {
                return (Some(state.to_string()), matching);
            }
        }
        (None, Vec::new())
    }

    fn all_events(&self) -> BTreeSet<&str> {
        self.transitions.iter().map(|t| t.event.as_str()).collect()
    }
}

/// Flattens a hierarchical statechart into an equivalent flat one. Leaf
/// states keep their ids; a replicated transition is named after the
/// original and the leaf it now serves. Already-flat machines come back
/// structurally identical.
pub fn flatten_statechart(model: &Model) -> Result<Model, RefactorError> {
    let chart = Chart::build(model)?;
    let machine_initial = chart.initial_leaf(&chart.root_initial);

    let mut out = Model::new(&model.metamodel_name, &model.metamodel_version);
    for leaf in chart.leaves() {
        let src = model.object(leaf).expect("leaf exists");
        let mut state = MObject::new(leaf, "State");
        state.attributes = src.attributes.clone();
        state
            .attributes
            .insert("initial".into(), Literal::Bool(leaf == machine_initial));
        out.roots.push(leaf.to_string());
        out.objects.push(state);
    }

    for leaf in chart.leaves() {
        for event in chart.all_events() {
            let (owner, transitions) = chart.effective(leaf, event);
            let Some(owner) = owner else { continue };
            for t in transitions {
                let target_leaf = chart.initial_leaf(&t.target);
                let (tid, sid, gid) = if owner == leaf {
                    // The leaf's own transition: keep its identity, links and
                    // attributes byte-for-byte.
                    let orig_links: Vec<&MLink> = model
                        .links
                        .iter()
                        .filter(|l| l.src == t.id)
                        .collect();
                    let sid = orig_links
                        .iter()
                        .find(|l| l.association == "source")
                        .map(|l| l.id.clone())
                        .expect("validated");
                    let gid = orig_links
                        .iter()
                        .find(|l| l.association == "target")
                        .map(|l| l.id.clone())
                        .expect("validated");
                    (t.id.clone(), sid, gid)
                } else {
                    let tid = format!("{}/{leaf}", t.id);
                    (tid.clone(), format!("{tid}/s"), format!("{tid}/t"))
                };
                let mut trans = MObject::new(&tid, "Transition");
                trans.attributes = model
                    .object(&t.id)
                    .map(|o| o.attributes.clone())
                    .unwrap_or_default();
                out.roots.push(tid.clone());
                out.objects.push(trans);
                out.links.push(MLink {
                    id: sid,
                    association: "source".into(),
                    src: tid.clone(),
                    dst: leaf.to_string(),
                });
                out.links.push(MLink {
                    id: gid,
                    association: "target".into(),
                    src: tid.clone(),
                    dst: target_leaf.clone(),
                });
            }
        }
    }

    out.canonicalize();
    out.validate()
        .map_err(|e| RefactorError::IllformedStatechart(format!("internal: {e}")))?;
    let report = check_conformance(&out, &flat_statechart_metamodel());
    if !report.conformant() {
        return Err(RefactorError::IllformedStatechart(format!(
            "internal: flattened output violates the flat metamodel: {}",
            report.violations[0].message
        )));
    }
    Ok(out)
}

/// Runs a deterministic machine, returning the active leaf state after each
/// event; events no transition handles leave the state unchanged. With no
/// events the trace is just the initial leaf. Two enabled transitions at the
/// same depth are a nondeterminism error.
pub fn simulate(model: &Model, events: &[&str]) -> Result<Vec<String>, RefactorError> {
    let chart = Chart::build(model)?;
    let mut active = chart.initial_leaf(&chart.root_initial);
    if events.is_empty() {
        return Ok(vec![active]);
    }
    let mut trace = Vec::with_capacity(events.len());
    for event in events {
        let (owner, transitions) = chart.effective(&active, event);
        if let Some(owner) = owner {
            if transitions.len() > 1 {
                return Err(RefactorError::Nondeterministic {
                    state: owner,
                    event: event.to_string(),
                    count: transitions.len(),
                });
            }
            active = chart.initial_leaf(&transitions[0].target);
        }
        trace.push(active.clone());
    }
    Ok(trace)
}
