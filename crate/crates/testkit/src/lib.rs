//! Seeded random generators shared by the integration and acceptance suites.
//! Everything here is deterministic in the seed.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use evolvekit_core::{
    Literal, MAssociation, MAttribute, MClass, MContainment, MLink, MObject, MaxBound, Metamodel,
    Model, Multiplicity, PrimType,
};
use evolvekit_ummie::{Action, AttrOp, ClassRef, PatternEdge, PatternNode, Rule, RuleGraph, Side};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn ident(rng: &mut StdRng, len: usize) -> String {
    (0..len).map(|_| (b'a' + rng.random_range(0..26u8)) as char).collect()
}

fn literal_for(rng: &mut StdRng, ty: &PrimType) -> Literal {
    match ty {
        PrimType::Str => {
            let len = rng.random_range(3..7);
            Literal::Str(ident(rng, len))
        }
        PrimType::Int => Literal::Int(rng.random_range(0..100)),
        PrimType::Bool => Literal::Bool(rng.random_bool(0.5)),
        PrimType::Float => Literal::Float(rng.random_range(0..1000) as f64 / 10.0),
        PrimType::Enum(values) => Literal::Str(values[rng.random_range(0..values.len())].clone()),
    }
}

fn attr(name: &str, ty: PrimType, required: bool) -> MAttribute {
    MAttribute { name: name.into(), ty, required, default: None }
}

fn containment(role: &str, child: &str) -> MContainment {
    MContainment {
        role: role.into(),
        child_class: child.into(),
        min: 0,
        max: MaxBound::Many,
    }
}

// ---------------------------------------------------------------------------
// Random metamodels and conformant models (migration acceptance)
// ---------------------------------------------------------------------------

/// A random metamodel: 3-6 classes with string/int/bool attributes, a
/// containment DAG along the class ordering, and up to two associations.
/// Every multiplicity is (0, many) so generated models always conform.
pub fn gen_metamodel(rng: &mut StdRng) -> Metamodel {
    let n = rng.random_range(3..=6);
    let mut mm = Metamodel::new("randmm", "1");
    for i in 0..n {
        let mut class = MClass {
            name: format!("C{i}"),
            is_abstract: false,
            superclass: None,
            attributes: Vec::new(),
            containments: Vec::new(),
        };
        // a0 is always a string so random instances stay distinguishable.
        class.attributes.push(attr("a0", PrimType::Str, rng.random_bool(0.5)));
        for a in 1..rng.random_range(1..=3) {
            let ty = match rng.random_range(0..3) {
                0 => PrimType::Str,
                1 => PrimType::Int,
                _ => PrimType::Bool,
            };
            class.attributes.push(attr(&format!("a{a}"), ty, rng.random_bool(0.5)));
        }
        mm.classes.push(class);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(0.4) {
                let role = format!("r{i}_{j}");
                let child = format!("C{j}");
                mm.classes[i].containments.push(containment(&role, &child));
            }
        }
    }
    for k in 0..rng.random_range(0..=2u32) {
        let src = rng.random_range(0..n);
        let dst = rng.random_range(0..n);
        mm.associations.push(MAssociation {
            name: format!("A{k}"),
            src_class: format!("C{src}"),
            dst_class: format!("C{dst}"),
            src_role: "s".into(),
            dst_role: "d".into(),
            src_mult: Multiplicity::default(),
            dst_mult: Multiplicity::default(),
        });
    }
    mm.canonicalize();
    mm.validate().expect("generated metamodel is well-formed");
    mm
}

/// A random model conformant to `mm`: a containment forest grown role by
/// role, every attribute filled, plus random links.
pub fn gen_model(rng: &mut StdRng, mm: &Metamodel, max_objects: usize) -> Model {
    let mut m = Model::new(&mm.name, &mm.version);
    let mut counter = 0usize;
    let mut fresh = |class: &MClass, rng: &mut StdRng| -> MObject {
        let mut o = MObject::new(&format!("o{counter:03}"), &class.name);
        counter += 1;
        for a in &class.attributes {
            o.attributes.insert(a.name.clone(), literal_for(rng, &a.ty));
        }
        o
    };

    let n_roots = rng.random_range(1..=3.min(max_objects.max(1)));
    for _ in 0..n_roots {
        let class = &mm.classes[rng.random_range(0..mm.classes.len())];
        let o = fresh(class, rng);
        m.roots.push(o.id.clone());
        m.objects.push(o);
    }
    let target = rng.random_range(n_roots..=max_objects.max(n_roots));
    let mut guard = 0;
    while m.objects.len() < target && guard < target * 20 {
        guard += 1;
        let parent_idx = rng.random_range(0..m.objects.len());
        let parent_class = m.objects[parent_idx].class_name.clone();
        let conts = mm.all_containments(&parent_class);
        if conts.is_empty() {
            continue;
        }
        let cont = conts[rng.random_range(0..conts.len())];
        let child_class = mm.class(&cont.child_class).expect("valid metamodel").clone();
        let role = cont.role.clone();
        let child = fresh(&child_class, rng);
        let child_id = child.id.clone();
        m.objects.push(child);
        m.objects[parent_idx].children.entry(role).or_default().push(child_id);
    }

    for assoc in &mm.associations {
        let srcs: Vec<String> = m
            .objects
            .iter()
            .filter(|o| mm.is_subtype(&o.class_name, &assoc.src_class))
            .map(|o| o.id.clone())
            .collect();
        let dsts: Vec<String> = m
            .objects
            .iter()
            .filter(|o| mm.is_subtype(&o.class_name, &assoc.dst_class))
            .map(|o| o.id.clone())
            .collect();
        if srcs.is_empty() || dsts.is_empty() {
            continue;
        }
        for k in 0..rng.random_range(0..=m.objects.len() / 3 + 1) {
            m.links.push(MLink {
                id: format!("l_{}_{k}", assoc.name),
                association: assoc.name.clone(),
                src: srcs[rng.random_range(0..srcs.len())].clone(),
                dst: dsts[rng.random_range(0..dsts.len())].clone(),
            });
        }
    }

    m.canonicalize();
    m.validate().expect("generated model is well-formed");
    m
}

/// A random delta over `mm`: the evolved metamodel plus the migration DSL
/// text that carries models across. One to three operations, each on its own
/// class: class rename, class deletion, attribute rename, conditional split
/// on a bool attribute, or a class addition.
pub fn gen_delta(rng: &mut StdRng, mm: &Metamodel) -> (Metamodel, String) {
    let mut evolved = mm.clone();
    evolved.version = "2".into();
    let mut rules: Vec<String> = Vec::new();

    let mut candidates: Vec<String> = mm.classes.iter().map(|c| c.name.clone()).collect();
    let n_ops = rng.random_range(1..=3.min(candidates.len()));

    let rename_refs = |evolved: &mut Metamodel, from: &str, to: &str| {
        for class in &mut evolved.classes {
            for cont in &mut class.containments {
                if cont.child_class == from {
                    cont.child_class = to.to_string();
                }
            }
        }
        for assoc in &mut evolved.associations {
            if assoc.src_class == from {
                assoc.src_class = to.to_string();
            }
            if assoc.dst_class == from {
                assoc.dst_class = to.to_string();
            }
        }
    };

    for _ in 0..n_ops {
        if candidates.is_empty() {
            break;
        }
        let class = candidates.remove(rng.random_range(0..candidates.len()));
        match rng.random_range(0..5) {
            // Class rename.
            0 => {
                let renamed = format!("{class}R");
                evolved.classes.iter_mut().find(|c| c.name == class).unwrap().name =
                    renamed.clone();
                rename_refs(&mut evolved, &class, &renamed);
                rules.push(format!("map {class} => {renamed}"));
            }
            // Class deletion: instances and incident links disappear.
            1 => {
                evolved.classes.retain(|c| c.name != class);
                for c in &mut evolved.classes {
                    c.containments.retain(|k| k.child_class != class);
                }
                evolved
                    .associations
                    .retain(|a| a.src_class != class && a.dst_class != class);
                rules.push(format!("map {class} => null"));
            }
            // Attribute rename.
            2 => {
                let target = evolved.classes.iter_mut().find(|c| c.name == class).unwrap();
                if target.attributes.is_empty() {
                    continue;
                }
                let idx = rng.random_range(0..target.attributes.len());
                let old = target.attributes[idx].name.clone();
                let new = format!("{old}r");
                target.attributes[idx].name = new.clone();
                rules.push(format!("map {class} => {class} with {{ {new} := src.{old} }}"));
            }
            // Conditional split on a bool attribute.
            3 => {
                let Some(flag) = mm
                    .class(&class)
                    .unwrap()
                    .attributes
                    .iter()
                    .find(|a| a.ty == PrimType::Bool)
                    .map(|a| a.name.clone())
                else {
                    continue;
                };
                let target = evolved.classes.iter_mut().find(|c| c.name == class).unwrap();
                target.is_abstract = true;
                for sub in ["T", "F"] {
                    evolved.classes.push(MClass {
                        name: format!("{class}{sub}"),
                        is_abstract: false,
                        superclass: Some(class.clone()),
                        attributes: Vec::new(),
                        containments: Vec::new(),
                    });
                }
                rules.push(format!("map {class} => {class}T when self.{flag} = true"));
                rules.push(format!("map {class} => {class}F otherwise"));
            }
            // Class addition with a generated child per container image.
            _ => {
                let new_class = format!("N{class}");
                evolved.classes.push(MClass {
                    name: new_class.clone(),
                    is_abstract: false,
                    superclass: None,
                    attributes: vec![attr("tag", PrimType::Str, true)],
                    containments: Vec::new(),
                });
                evolved
                    .classes
                    .iter_mut()
                    .find(|c| c.name == class)
                    .unwrap()
                    .containments
                    .push(containment(&format!("gen{new_class}"), &new_class));
                rules.push(format!("add {new_class} in {class} with {{ tag := \"made\" }}"));
            }
        }
    }

    evolved.canonicalize();
    evolved.validate().expect("evolved metamodel is well-formed");
    let mut text = format!(
        "delta \"gen\" from {} {} to {} {}\n",
        mm.name, mm.version, evolved.name, evolved.version
    );
    for rule in rules {
        text.push_str(&rule);
        text.push('\n');
    }
    (evolved, text)
}

// ---------------------------------------------------------------------------
// Constraint benchmark fixtures (counterexample oracle acceptance)
// ---------------------------------------------------------------------------

/// Fixed metamodel for constraint evaluation: components with ports,
/// threads, nesting, and a port-to-port connection association.
pub fn bench_metamodel() -> Metamodel {
    let mut mm = Metamodel::new("bench", "1");
    mm.classes.push(MClass {
        name: "Component".into(),
        is_abstract: false,
        superclass: None,
        attributes: vec![attr("name", PrimType::Str, true)],
        containments: vec![
            containment("ports", "Port"),
            containment("threads", "Thread"),
            containment("sub", "Component"),
        ],
    });
    mm.classes.push(MClass {
        name: "Port".into(),
        is_abstract: false,
        superclass: None,
        attributes: vec![attr("name", PrimType::Str, true)],
        containments: vec![],
    });
    mm.classes.push(MClass {
        name: "Thread".into(),
        is_abstract: false,
        superclass: None,
        attributes: vec![attr("name", PrimType::Str, true)],
        containments: vec![],
    });
    mm.associations.push(MAssociation {
        name: "Conn".into(),
        src_class: "Port".into(),
        dst_class: "Port".into(),
        src_role: "src".into(),
        dst_role: "dst".into(),
        src_mult: Multiplicity::default(),
        dst_mult: Multiplicity::default(),
    });
    mm.canonicalize();
    mm.validate().expect("bench metamodel is well-formed");
    mm
}

/// Five constraints of assorted shapes over the bench metamodel.
pub fn bench_suite_text() -> &'static str {
    r#"metamodel bench

constraint UniquePortNames "Port names unique per component" phase entry:
  forall c in all(Component) . forall p1 in c.ports . forall p2 in c.ports .
    (p1 = p2) or (p1.name != p2.name)

constraint ComponentHasThread "every Component must contain at least one Thread" phase entry:
  forall c in all(Component) . size(c.threads) >= 1

constraint PortNamed "ports carry a non-empty name" phase entry:
  forall p in all(Port) . p.name != ""

constraint NoSelfConn "no port feeds itself" phase entry:
  forall p in all(Port) . forall q in p.linked(Conn, src) . not (p = q)

constraint ThreadEcho "threaded components own a thread named after them" phase exit:
  forall c in all(Component) . (size(c.threads) > 0) implies
    (exists t in c.threads . t.name = c.name)
"#
}

/// A small random bench model, name pools chosen so violations are common.
pub fn gen_bench_model(rng: &mut StdRng, max_objects: usize) -> Model {
    const NAMES: [&str; 5] = ["", "a", "b", "in", "out"];
    let mut m = Model::new("bench", "1");
    let mut counter = 0usize;
    let mut components: Vec<String> = Vec::new();
    let mut ports: Vec<String> = Vec::new();

    let n_comps = rng.random_range(1..=4usize);
    for _ in 0..n_comps {
        let id = format!("c{counter:02}");
        counter += 1;
        let mut o = MObject::new(&id, "Component");
        o.attributes
            .insert("name".into(), Literal::Str(NAMES[rng.random_range(0..NAMES.len())].into()));
        if components.is_empty() || rng.random_bool(0.5) {
            m.roots.push(id.clone());
        } else {
            let parent = components[rng.random_range(0..components.len())].clone();
            m.object_mut(&parent)
                .unwrap()
                .children
                .entry("sub".into())
                .or_default()
                .push(id.clone());
        }
        components.push(id.clone());
        m.objects.push(o);
    }
    while m.objects.len() < max_objects && rng.random_bool(0.8) {
        let parent = components[rng.random_range(0..components.len())].clone();
        let (class, role, prefix) = if rng.random_bool(0.6) {
            ("Port", "ports", "p")
        } else {
            ("Thread", "threads", "t")
        };
        let id = format!("{prefix}{counter:02}");
        counter += 1;
        let mut o = MObject::new(&id, class);
        o.attributes
            .insert("name".into(), Literal::Str(NAMES[rng.random_range(0..NAMES.len())].into()));
        if class == "Port" {
            ports.push(id.clone());
        }
        m.objects.push(o);
        m.object_mut(&parent).unwrap().children.entry(role.into()).or_default().push(id);
    }
    if !ports.is_empty() {
        for k in 0..rng.random_range(0..=ports.len()) {
            m.links.push(MLink {
                id: format!("conn{k}"),
                association: "Conn".into(),
                src: ports[rng.random_range(0..ports.len())].clone(),
                dst: ports[rng.random_range(0..ports.len())].clone(),
            });
        }
    }
    m.canonicalize();
    m.validate().expect("generated bench model is well-formed");
    m
}

// ---------------------------------------------------------------------------
// Id scrambling (matching recovery acceptance)
// ---------------------------------------------------------------------------

/// Renames every object id through a random bijection (structure and
/// attributes untouched), returning the new model and the old-to-new map.
pub fn scramble_ids(rng: &mut StdRng, model: &Model) -> (Model, BTreeMap<String, String>) {
    let mut indices: Vec<usize> = (0..model.objects.len()).collect();
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
    let mapping: BTreeMap<String, String> = model
        .objects
        .iter()
        .zip(&indices)
        .map(|(o, idx)| (o.id.clone(), format!("x{idx:03}")))
        .collect();

    let mut out = model.clone();
    for o in &mut out.objects {
        o.id = mapping[&o.id].clone();
        for kids in o.children.values_mut() {
            for kid in kids.iter_mut() {
                *kid = mapping[kid.as_str()].clone();
            }
        }
    }
    for r in &mut out.roots {
        *r = mapping[r.as_str()].clone();
    }
    for (i, l) in out.links.iter_mut().enumerate() {
        l.id = format!("xl{i:03}");
        l.src = mapping[&l.src].clone();
        l.dst = mapping[&l.dst].clone();
    }
    out.canonicalize();
    (out, mapping)
}

// ---------------------------------------------------------------------------
// Rule graphs (rule-migration acceptance)
// ---------------------------------------------------------------------------

/// A random rule graph over the two metamodels. Attribute operations on
/// source nodes reference attributes the class actually declares, so a
/// rename in the delta must rewrite them without breakage.
pub fn gen_rulegraph(rng: &mut StdRng, mm_src: &Metamodel, mm_dst: &Metamodel) -> RuleGraph {
    let mut rules = Vec::new();
    for r in 0..rng.random_range(1..=3usize) {
        let mut nodes = Vec::new();
        let mut attr_ops = Vec::new();
        for n in 0..rng.random_range(2..=5usize) {
            let (side, mm) = if rng.random_bool(0.6) {
                (Side::Source, mm_src)
            } else {
                (Side::Destination, mm_dst)
            };
            let class = &mm.classes[rng.random_range(0..mm.classes.len())];
            let id = format!("n{n}");
            let action = match rng.random_range(0..3) {
                0 => Action::Match,
                1 => Action::Create,
                _ => Action::Delete,
            };
            if side == Side::Source && !class.attributes.is_empty() && rng.random_bool(0.5) {
                let a = &class.attributes[rng.random_range(0..class.attributes.len())];
                attr_ops.push(AttrOp {
                    node: id.clone(),
                    attr: a.name.clone(),
                    expr: format!("{} + 1", a.name),
                });
            }
            nodes.push(PatternNode {
                id,
                side,
                class_ref: ClassRef::Class(class.name.clone()),
                action,
            });
        }
        let mut edges = Vec::new();
        for _ in 0..rng.random_range(0..nodes.len()) {
            edges.push(PatternEdge {
                src: nodes[rng.random_range(0..nodes.len())].id.clone(),
                dst: nodes[rng.random_range(0..nodes.len())].id.clone(),
                label: String::new(),
            });
        }
        rules.push(Rule { name: format!("rule{r}"), nodes, edges, attr_ops });
    }
    RuleGraph { name: "generated".into(), rules }
}

// ---------------------------------------------------------------------------
// Component networks (refactoring acceptance)
// ---------------------------------------------------------------------------

/// A random component network against the builtin metamodel, plus the
/// refactoring targets it guarantees: `(model, push (component, container),
/// pull component)`.
///
/// S1 and S2 are portless structural containers under the root; leaves carry
/// the ports. At least one leaf lives under S1 (the pull-up target keeps its
/// container structural) and one at root level next to S1 (the push-down
/// subject), so both refactorings always have valid, behavior-comparable
/// targets.
pub fn gen_component_net(
    rng: &mut StdRng,
    max_leaves: usize,
    max_channels: usize,
) -> (Model, (String, String), String) {
    let mut m = Model::new("compnet", "1");
    for id in ["R0", "S1", "S2"] {
        m.objects.push(MObject::new(id, "Component"));
    }
    m.roots.push("R0".into());
    let root = m.object_mut("R0").unwrap();
    root.children.insert("sub".into(), vec!["S1".into(), "S2".into()]);

    let n_leaves = rng.random_range(2..=max_leaves.max(2));
    let mut leaves: Vec<(String, String)> = Vec::new(); // (leaf, parent)
    for i in 0..n_leaves {
        let id = format!("L{i}");
        let parent = match i {
            0 => "S1".to_string(),
            1 => "R0".to_string(),
            _ => ["R0", "S1", "S2"][rng.random_range(0..3)].to_string(),
        };
        m.objects.push(MObject::new(&id, "Component"));
        m.object_mut(&parent).unwrap().children.entry("sub".into()).or_default().push(id.clone());
        leaves.push((id, parent));
    }

    let mut ports: Vec<String> = Vec::new();
    for (leaf, _) in &leaves {
        for k in 0..rng.random_range(1..=2usize) {
            let id = format!("{leaf}/p{k}");
            let mut port = MObject::new(&id, "Port");
            let dir = if rng.random_bool(0.5) { "out" } else { "in" };
            port.attributes.insert("direction".into(), Literal::Str(dir.into()));
            m.objects.push(port);
            m.object_mut(leaf).unwrap().children.entry("ports".into()).or_default().push(id.clone());
            ports.push(id);
        }
    }

    // Channels only between ports whose owners satisfy locality.
    let owner: BTreeMap<String, String> = leaves
        .iter()
        .flat_map(|(leaf, _)| {
            m.object(leaf)
                .unwrap()
                .children
                .get("ports")
                .cloned()
                .unwrap_or_default()
                .into_iter()
                .map(move |p| (p, leaf.clone()))
        })
        .collect();
    let parent_of: BTreeMap<String, String> = leaves.iter().cloned().collect();
    let mut legal: Vec<(String, String)> = Vec::new();
    for a in &ports {
        for b in &ports {
            if a == b {
                continue;
            }
            let (oa, ob) = (&owner[a], &owner[b]);
            if oa == ob || parent_of[oa] == parent_of[ob] {
                legal.push((a.clone(), b.clone()));
            }
        }
    }
    let n_channels = rng.random_range(0..=max_channels.min(legal.len()));
    for k in 0..n_channels {
        let idx = rng.random_range(0..legal.len());
        let (src, dst) = legal.remove(idx);
        m.links.push(MLink {
            id: format!("ch{k}"),
            association: "Channel".into(),
            src,
            dst,
        });
    }

    m.canonicalize();
    m.validate().expect("generated component net is well-formed");

    let push_subject = leaves
        .iter()
        .find(|(_, p)| p == "R0")
        .map(|(l, _)| l.clone())
        .expect("leaf 1 lives at root level");
    let pull_subject = leaves
        .iter()
        .find(|(_, p)| p == "S1")
        .map(|(l, _)| l.clone())
        .expect("leaf 0 lives in S1");
    (m, (push_subject, "S1".to_string()), pull_subject)
}

// ---------------------------------------------------------------------------
// Statecharts (flattening acceptance)
// ---------------------------------------------------------------------------

/// A random deterministic hierarchical statechart over the events
/// `{"a", "b"}`: at most one outgoing transition per (state, event), exactly
/// one initial state per composite and at the root level.
pub fn gen_statechart(rng: &mut StdRng, max_states: usize) -> Model {
    let n = rng.random_range(2..=max_states.max(2));
    let mut m = Model::new("statechart", "1");
    let mut states: Vec<String> = Vec::new();
    for i in 0..n {
        let id = format!("s{i}");
        let mut state = MObject::new(&id, "State");
        state.attributes.insert("initial".into(), Literal::Bool(false));
        m.objects.push(state);
        if i == 0 || rng.random_bool(0.25) {
            m.roots.push(id.clone());
        } else {
            let parent = states[rng.random_range(0..states.len())].clone();
            m.object_mut(&parent)
                .unwrap()
                .children
                .entry("states".into())
                .or_default()
                .push(id.clone());
        }
        states.push(id);
    }
    // One initial per root level and per composite: the id-smallest child.
    let mut root_states: Vec<String> = m.roots.clone();
    root_states.sort();
    let first_root = root_states[0].clone();
    m.object_mut(&first_root)
        .unwrap()
        .attributes
        .insert("initial".into(), Literal::Bool(true));
    let composite_kids: Vec<Vec<String>> = m
        .objects
        .iter()
        .filter_map(|o| o.children.get("states").cloned())
        .collect();
    for kids in composite_kids {
        let mut sorted = kids;
        sorted.sort();
        m.object_mut(&sorted[0])
            .unwrap()
            .attributes
            .insert("initial".into(), Literal::Bool(true));
    }

    let mut t = 0;
    for i in 0..n {
        for event in ["a", "b"] {
            if rng.random_bool(0.5) {
                let src = format!("s{i}");
                let dst = states[rng.random_range(0..states.len())].clone();
                let tid = format!("t{t}");
                t += 1;
                let mut trans = MObject::new(&tid, "Transition");
                trans.attributes.insert("event".into(), Literal::Str(event.into()));
                m.objects.push(trans);
                m.roots.push(tid.clone());
                m.links.push(MLink {
                    id: format!("{tid}.s"),
                    association: "source".into(),
                    src: tid.clone(),
                    dst: src,
                });
                m.links.push(MLink {
                    id: format!("{tid}.t"),
                    association: "target".into(),
                    src: tid.clone(),
                    dst,
                });
            }
        }
    }
    m.canonicalize();
    m.validate().expect("generated statechart is well-formed");
    m
}
