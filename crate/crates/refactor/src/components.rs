//! Component-network refactorings.
//!
//! The locality rule restricts channels to ports whose owning components are
//! siblings or in a direct parent/child relation. Moving a component breaks
//! locality for channels that now cross the new container's boundary; those
//! are split in two via a fresh boundary port on the container. Pulling a
//! component out merges relay pairs back together and deletes boundary ports
//! that served no one else.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use evolvekit_core::{load_metamodel, Literal, MLink, MObject, Metamodel, Model};

use crate::error::RefactorError;

static COMPONENTS_MM: LazyLock<Metamodel> = LazyLock::new(|| {
    load_metamodel(include_str!("../../../builtin/components.mm.json"))
        .expect("builtin components metamodel is well-formed")
});

/// The built-in component-network metamodel (`builtin/components.mm.json`).
pub fn components_metamodel() -> &'static Metamodel {
    &COMPONENTS_MM
}

/// Leaf-to-leaf reachability: the behavioral invariant of the refactorings.
pub type Connectivity = BTreeSet<(String, String)>;

struct Net<'a> {
    /// child id -> parent id (components and ports alike)
    parent: BTreeMap<&'a str, &'a str>,
}

impl<'a> Net<'a> {
    fn build(model: &'a Model) -> Self {
        let parent = model
            .parent_map()
            .into_iter()
            .map(|(child, (parent, _))| (child, parent))
            .collect();
        Net { parent }
    }

    fn owner_of_port(&self, port: &str) -> Option<&'a str> {
        self.parent.get(port).copied()
    }

    fn component_parent(&self, comp: &str) -> Option<&'a str> {
        self.parent.get(comp).copied()
    }

    fn in_subtree(&self, id: &str, root: &str) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == root {
                return true;
            }
            cur = self.parent.get(c).copied();
        }
        false
    }

    /// Channel locality: owners are siblings (same parent or both roots),
    /// identical, or in a direct parent/child relation.
    fn channel_is_local(&self, link: &MLink) -> bool {
        let (Some(a), Some(b)) = (self.owner_of_port(&link.src), self.owner_of_port(&link.dst))
        else {
            return false;
        };
        let (pa, pb) = (self.component_parent(a), self.component_parent(b));
        pa == pb || pa == Some(b) || pb == Some(a)
    }
}

fn require_component(model: &Model, id: &str) -> Result<(), RefactorError> {
    match model.object(id) {
        Some(o) if o.class_name == "Component" => Ok(()),
        _ => Err(RefactorError::IdUnknown(id.to_string())),
    }
}

fn detach(model: &mut Model, id: &str) {
    model.roots.retain(|r| r != id);
    for obj in &mut model.objects {
        for kids in obj.children.values_mut() {
            kids.retain(|k| k != id);
        }
    }
    for obj in &mut model.objects {
        obj.children.retain(|_, kids| !kids.is_empty());
    }
}

fn fresh_boundary_port(model: &mut Model, container: &str, direction: &str) -> String {
    let mut ordinal = 0;
    let mut id = format!("{container}/bp/{ordinal}");
    while model.object(&id).is_some() {
        ordinal += 1;
        id = format!("{container}/bp/{ordinal}");
    }
    let mut port = MObject::new(&id, "Port");
    port.attributes.insert("direction".into(), Literal::Str(direction.into()));
    model.objects.push(port);
    model
        .object_mut(container)
        .expect("container exists")
        .children
        .entry("ports".into())
        .or_default()
        .push(id.clone());
    id
}

/// Splits every channel that violates locality by crossing `container`'s
/// boundary. The half that touches the container's interior gets the
/// `/inner` suffix. Violations not crossing this boundary are left alone
/// (the caller's precondition is that the input was local).
fn split_boundary_violations(model: &mut Model, container: &str) {
    loop {
        let net = Net::build(model);
        let interior = |port: &str| {
            net.owner_of_port(port)
                .is_some_and(|o| o != container && net.in_subtree(o, container))
        };
        let violating = model
            .links
            .iter()
            .filter(|l| !net.channel_is_local(l))
            .filter(|l| interior(&l.src) != interior(&l.dst))
            .min_by(|a, b| a.id.cmp(&b.id))
            .cloned();
        let Some(link) = violating else { break };

        let src_inside = interior(&link.src);
        drop(net);

        let direction = if src_inside { "out" } else { "in" };
        let bp = fresh_boundary_port(model, container, direction);
        model.links.retain(|l| l.id != link.id);
        let (inner, outer) = (format!("{}/inner", link.id), format!("{}/outer", link.id));
        if src_inside {
            model.links.push(MLink {
                id: inner,
                association: "Channel".into(),
                src: link.src.clone(),
                dst: bp.clone(),
            });
            model.links.push(MLink {
                id: outer,
                association: "Channel".into(),
                src: bp,
                dst: link.dst.clone(),
            });
        } else {
            model.links.push(MLink {
                id: outer,
                association: "Channel".into(),
                src: link.src.clone(),
                dst: bp.clone(),
            });
            model.links.push(MLink {
                id: inner,
                association: "Channel".into(),
                src: bp,
                dst: link.dst.clone(),
            });
        }
    }
}

/// Pushes a component down into a sibling container. Channels between the
/// moved component and anything outside the container are split via fresh
/// boundary ports; everything else moves along untouched.
///
/// Connectivity is preserved when the container is structural: a container
/// that was itself a leaf with wired ports stops being a leaf, which changes
/// what leaf-to-leaf reachability means for its own ports.
pub fn push_down(model: &Model, component: &str, container: &str) -> Result<Model, RefactorError> {
    require_component(model, component)?;
    require_component(model, container)?;
    if component == container {
        return Err(RefactorError::NotSiblings(component.to_string(), container.to_string()));
    }
    {
        let net = Net::build(model);
        if net.component_parent(component) != net.component_parent(container) {
            return Err(RefactorError::NotSiblings(
                component.to_string(),
                container.to_string(),
            ));
        }
    }

    let mut out = model.clone();
    detach(&mut out, component);
    out.object_mut(container)
        .expect("container exists")
        .children
        .entry("sub".into())
        .or_default()
        .push(component.to_string());

    split_boundary_violations(&mut out, container);
    out.canonicalize();
    debug_assert!(out.validate().is_ok());
    Ok(out)
}

/// Pulls a component up one level out of its container. Relay pairs through
/// a boundary port that served only this component's traffic are merged back
/// into direct channels and the port is deleted; boundary ports still
/// relaying other traffic stay. Channels between the moved component and the
/// container's remaining interior are split to restore locality.
pub fn pull_up(model: &Model, component: &str) -> Result<Model, RefactorError> {
    require_component(model, component)?;
    let (container, grandparent) = {
        let net = Net::build(model);
        let container = net
            .component_parent(component)
            .ok_or_else(|| RefactorError::AtRoot(component.to_string()))?
            .to_string();
        let grandparent = net
            .component_parent(&container)
            .ok_or_else(|| RefactorError::AtRoot(component.to_string()))?
            .to_string();
        (container, grandparent)
    };

    let mut out = model.clone();
    detach(&mut out, component);
    out.object_mut(&grandparent)
        .expect("grandparent exists")
        .children
        .entry("sub".into())
        .or_default()
        .push(component.to_string());

    merge_relays(&mut out, component, &container);
    split_boundary_violations(&mut out, &container);
    out.canonicalize();
    debug_assert!(out.validate().is_ok());
    Ok(out)
}

fn merged_channel_id(inner: &str, outer: &str) -> String {
    // Undo the naming of a previous split when both halves carry it.
    if let (Some(a), Some(b)) = (inner.strip_suffix("/inner"), outer.strip_suffix("/outer")) {
        if a == b {
            return a.to_string();
        }
    }
    format!("{inner}+{outer}")
}

/// Merges relay pairs at `container`'s boundary ports that exist solely to
/// carry `component`'s traffic, now that the component sits outside.
fn merge_relays(model: &mut Model, component: &str, container: &str) {
    let boundary_ports: Vec<String> = model
        .object(container)
        .and_then(|c| c.children.get("ports").cloned())
        .unwrap_or_default();

    for bp in boundary_ports {
        let mut merged_any = false;
        loop {
            let net = Net::build(model);
            let incoming: Vec<MLink> = model
                .links
                .iter()
                .filter(|l| l.dst == bp)
                .cloned()
                .collect();
            let outgoing: Vec<MLink> = model
                .links
                .iter()
                .filter(|l| l.src == bp)
                .cloned()
                .collect();

            // Outward relay: component -> bp -> elsewhere, mergeable when the
            // continuation is unique.
            let outward = incoming.iter().find(|l| {
                net.owner_of_port(&l.src)
                    .is_some_and(|o| net.in_subtree(o, component))
            });
            if let (Some(ch_in), 1) = (outward, outgoing.len()) {
                let ch_out = &outgoing[0];
                let merged = MLink {
                    id: merged_channel_id(&ch_in.id, &ch_out.id),
                    association: "Channel".into(),
                    src: ch_in.src.clone(),
                    dst: ch_out.dst.clone(),
                };
                let (in_id, out_id) = (ch_in.id.clone(), ch_out.id.clone());
                model.links.retain(|l| l.id != in_id);
                let others_feed = model.links.iter().any(|l| l.dst == bp);
                if !others_feed {
                    model.links.retain(|l| l.id != out_id);
                }
                model.links.push(merged);
                merged_any = true;
                continue;
            }

            // Inward relay: elsewhere -> bp -> component.
            let inward = outgoing.iter().find(|l| {
                net.owner_of_port(&l.dst)
                    .is_some_and(|o| net.in_subtree(o, component))
            });
            if let (Some(ch_out), 1) = (inward, incoming.len()) {
                let ch_in = &incoming[0];
                let merged = MLink {
                    id: merged_channel_id(&ch_out.id, &ch_in.id),
                    association: "Channel".into(),
                    src: ch_in.src.clone(),
                    dst: ch_out.dst.clone(),
                };
                let (in_id, out_id) = (ch_in.id.clone(), ch_out.id.clone());
                model.links.retain(|l| l.id != out_id);
                let others_consume = model.links.iter().any(|l| l.src == bp);
                if !others_consume {
                    model.links.retain(|l| l.id != in_id);
                }
                model.links.push(merged);
                merged_any = true;
                continue;
            }
            break;
        }

        let unused = !model.links.iter().any(|l| l.src == bp || l.dst == bp);
        if merged_any && unused {
            detach(model, &bp);
            model.objects.retain(|o| o.id != bp);
        }
    }
}

/// End-to-end reachability between ports of leaf components, following
/// channel direction through any chain of boundary ports.
pub fn flattened_connectivity(model: &Model) -> Connectivity {
    let net = Net::build(model);
    let leaf_components: BTreeSet<&str> = model
        .objects
        .iter()
        .filter(|o| {
            o.class_name == "Component" && o.children.get("sub").is_none_or(|s| s.is_empty())
        })
        .map(|o| o.id.as_str())
        .collect();
    let leaf_ports: BTreeSet<&str> = model
        .objects
        .iter()
        .filter(|o| o.class_name == "Port")
        .filter(|o| {
            net.owner_of_port(&o.id)
                .is_some_and(|owner| leaf_components.contains(owner))
        })
        .map(|o| o.id.as_str())
        .collect();

    let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for l in &model.links {
        edges.entry(l.src.as_str()).or_default().push(l.dst.as_str());
    }

    let mut out = Connectivity::new();
    for &start in &leaf_ports {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut stack: Vec<&str> = edges.get(start).cloned().unwrap_or_default();
        while let Some(p) = stack.pop() {
            if !seen.insert(p) {
                continue;
            }
            if leaf_ports.contains(p) {
                out.insert((start.to_string(), p.to_string()));
            }
            if let Some(next) = edges.get(p) {
                stack.extend(next.iter().copied());
            }
        }
    }
    out
}
