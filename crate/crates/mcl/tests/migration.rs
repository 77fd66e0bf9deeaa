//! End-to-end migration over the shipped scenario corpus.

use std::fs;
use std::path::PathBuf;

use evolvekit_constraints::{evaluate_suite, parse_constraints};
use evolvekit_core::{
    check_conformance, load_metamodel, load_model, save_model, Metamodel, Model,
};
use evolvekit_mcl::{migrate_model, parse_mcl, MclError, MigrationReport};

fn corpus(rel: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel);
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("read {}: {e}", p.display()))
}

fn scenario(v1: &str, v2: &str, mcl: &str, model: &str) -> (Metamodel, Metamodel, Model, Model, MigrationReport) {
    let mm_src = load_metamodel(&corpus(v1)).unwrap();
    let mm_dst = load_metamodel(&corpus(v2)).unwrap();
    let spec = parse_mcl(&corpus(mcl), &mm_src, &mm_dst).unwrap();
    let input = load_model(&corpus(model)).unwrap();
    let (output, report) = migrate_model(&input, &spec, &mm_src, &mm_dst).unwrap();
    assert!(
        check_conformance(&output, &mm_dst).conformant(),
        "{mcl}: output must conform to the evolved metamodel"
    );
    assert!(report.accounts_for(input.objects.len()), "{mcl}: accounting broken");
    (mm_src, mm_dst, input, output, report)
}

#[test]
fn identity_delta_reproduces_canonical_bytes() {
    let mm_src = load_metamodel(&corpus("threads/softarch-v1.mm.json")).unwrap();
    let mut mm_dst = mm_src.clone();
    mm_dst.version = "9".into();
    let spec = parse_mcl("delta \"id\" from softarch 1 to softarch 9", &mm_src, &mm_dst).unwrap();
    let input = load_model(&corpus("threads/arch.model.json")).unwrap();
    let (output, report) = migrate_model(&input, &spec, &mm_src, &mm_dst).unwrap();
    let mut expected = input.clone();
    expected.metamodel_version = "9".into();
    assert_eq!(save_model(&output), save_model(&expected));
    assert_eq!(report.identity_carried, input.objects.len() as u64);
    assert!(report.dropped.is_empty());
}

#[test]
fn thread_addition_gives_every_component_one_thread() {
    let (_, mm_dst, input, output, report) = scenario(
        "threads/softarch-v1.mm.json",
        "threads/softarch-v2.mm.json",
        "threads/thread-add.mcl",
        "threads/arch.model.json",
    );
    let components: Vec<_> =
        output.objects.iter().filter(|o| o.class_name == "Component").collect();
    assert_eq!(components.len(), input.objects.len());
    for c in &components {
        let threads = c.children.get("threads").map_or(0, |k| k.len());
        assert_eq!(threads, 1, "component {} should gain exactly one thread", c.id);
    }
    assert_eq!(report.added_objects.len(), components.len());
    // Generated ids are structured and the name command ran against the parent.
    let t = output.object("ctrl/Thread/0").expect("structured id");
    assert_eq!(t.attributes["name"], evolvekit_core::Literal::Str("controller_t0".into()));

    // The addition makes the shipped constraint pass.
    let suite = parse_constraints(&corpus("threads/threads.constraints"), &mm_dst).unwrap();
    let before = evaluate_suite(&suite, &input, &mm_dst, None);
    assert!(!before.valid, "source model lacks threads");
    let after = evaluate_suite(&suite, &output, &mm_dst, None);
    assert!(after.valid, "migrated model must satisfy ComponentHasThread");
}

#[test]
fn port_split_follows_first_match_and_drops_incompatible_links() {
    let (_, _, _, output, report) = scenario(
        "portsplit/components-v1.mm.json",
        "portsplit/components-v2.mm.json",
        "portsplit/port-split.mcl",
        "portsplit/net.model.json",
    );
    let class_of = |id: &str| output.object(id).unwrap().class_name.clone();
    // p3 plays src in two links, so the first rule wins even though it also
    // plays dst; pc plays src; everything else falls through to InPort.
    assert_eq!(class_of("p3"), "OutPort");
    assert_eq!(class_of("pc"), "OutPort");
    assert_eq!(class_of("p11"), "InPort");
    assert_eq!(class_of("p12"), "InPort");
    assert_eq!(class_of("p22"), "InPort");
    // pc -> p3 connected two ports that both became OutPort; it cannot be
    // represented in the evolved metamodel and is dropped.
    let surviving: Vec<&str> = output.links.iter().map(|l| l.id.as_str()).collect();
    assert_eq!(surviving, vec!["c_p3_p11", "c_p3_p22"]);
    assert_eq!(report.dropped_links.len(), 1);
    assert_eq!(report.dropped_links[0].id, "c_pc_p3");
    // Rule counters: 2 OutPort, 3 InPort.
    assert_eq!(report.mapped[0].count, 2);
    assert_eq!(report.mapped[1].count, 3);
}

#[test]
fn reparent_moves_classes_to_grandparent_and_keeps_other_children() {
    let (_, _, _, output, _) = scenario(
        "reparent/org-v1.mm.json",
        "reparent/org-v2.mm.json",
        "reparent/reparent.mcl",
        "reparent/org.model.json",
    );
    let pp = output.object("pp1").unwrap();
    let mut classes = pp.children.get("classes").cloned().unwrap_or_default();
    classes.sort();
    assert_eq!(classes, vec!["cls1", "cls2", "cls3"]);
    let p1 = output.object("par1").unwrap();
    assert!(!p1.children.contains_key("classes"), "classes moved away");
    assert_eq!(p1.children.get("others").unwrap(), &vec!["oth1".to_string()]);
    let p2 = output.object("par2").unwrap();
    assert!(!p2.children.contains_key("classes"));
}

#[test]
fn delete_delta_cascades_and_drops_incident_links() {
    let (_, _, input, output, report) = scenario(
        "deletion/legacy-v1.mm.json",
        "deletion/legacy-v2.mm.json",
        "deletion/delete.mcl",
        "deletion/plant.model.json",
    );
    for gone in ["lt1", "lt2", "d1"] {
        assert!(output.object(gone).is_none(), "{gone} must be deleted");
    }
    assert!(output.links.is_empty(), "uses links had LegacyThing endpoints");
    assert_eq!(report.dropped.len(), 3);
    assert_eq!(report.dropped_links.len(), 2);
    // Cascade reason on the Detail child: its own rule never ran because the
    // subtree was already gone.
    let d1 = report.dropped.iter().find(|d| d.id == "d1").unwrap();
    assert!(d1.reason.contains("dropped subtree"), "{}", d1.reason);
    assert_eq!(
        output.objects.len(),
        input.objects.len() - 3,
        "System and Parts survive"
    );
}

#[test]
fn conditional_split_maps_by_attribute_and_runs_commands() {
    let (_, _, _, output, report) = scenario(
        "condsplit/devices-v1.mm.json",
        "condsplit/devices-v2.mm.json",
        "condsplit/cond-split.mcl",
        "condsplit/lab.model.json",
    );
    assert_eq!(output.object("temp").unwrap().class_name, "Sensor");
    assert_eq!(output.object("flow").unwrap().class_name, "Sensor");
    assert_eq!(output.object("fan").unwrap().class_name, "Actuator");
    assert_eq!(
        output.object("temp").unwrap().attributes["label"],
        evolvekit_core::Literal::Str("s:temp".into())
    );
    assert_eq!(
        output.object("fan").unwrap().attributes["label"],
        evolvekit_core::Literal::Str("a:fan".into())
    );
    // kind is retired: dropped with a warning, not carried over.
    assert!(!output.object("temp").unwrap().attributes.contains_key("kind"));
    assert!(report
        .warnings
        .iter()
        .any(|w| w.message.contains("`kind`") && w.message.contains("dropped")));
}

#[test]
fn input_file_order_does_not_change_output() {
    let mm_src = load_metamodel(&corpus("condsplit/devices-v1.mm.json")).unwrap();
    let mm_dst = load_metamodel(&corpus("condsplit/devices-v2.mm.json")).unwrap();
    let spec = parse_mcl(&corpus("condsplit/cond-split.mcl"), &mm_src, &mm_dst).unwrap();
    let text = corpus("condsplit/lab.model.json");
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut permuted = parsed.clone();
    permuted["objects"].as_array_mut().unwrap().reverse();
    let a = load_model(&text).unwrap();
    let b = load_model(&serde_json::to_string(&permuted).unwrap()).unwrap();
    let (out_a, _) = migrate_model(&a, &spec, &mm_src, &mm_dst).unwrap();
    let (out_b, _) = migrate_model(&b, &spec, &mm_src, &mm_dst).unwrap();
    assert_eq!(save_model(&out_a), save_model(&out_b));
}

#[test]
fn missing_required_attribute_without_default_fails() {
    let mm_src = load_metamodel(&corpus("condsplit/devices-v1.mm.json")).unwrap();
    let mm_dst = load_metamodel(&corpus("condsplit/devices-v2.mm.json")).unwrap();
    // No commands: label stays unset and has no default.
    let spec = parse_mcl(
        "delta \"bad\" from devices 1 to devices 2\n\
         map Device => Sensor when self.kind = \"sensor\"\n\
         map Device => Actuator otherwise",
        &mm_src,
        &mm_dst,
    )
    .unwrap();
    let input = load_model(&corpus("condsplit/lab.model.json")).unwrap();
    let err = migrate_model(&input, &spec, &mm_src, &mm_dst).unwrap_err();
    match err {
        MclError::Incomplete { msg, .. } => assert!(msg.contains("label"), "{msg}"),
        other => panic!("expected Incomplete, got {other}"),
    }
}

#[test]
fn non_conformant_source_is_rejected() {
    let mm_src = load_metamodel(&corpus("threads/softarch-v1.mm.json")).unwrap();
    let mut mm_dst = mm_src.clone();
    mm_dst.version = "9".into();
    let spec = parse_mcl("delta \"id\" from softarch 1 to softarch 9", &mm_src, &mm_dst).unwrap();
    let mut input = load_model(&corpus("threads/arch.model.json")).unwrap();
    input.object_mut("ui").unwrap().attributes.remove("name");
    let err = migrate_model(&input, &spec, &mm_src, &mm_dst).unwrap_err();
    assert!(matches!(err, MclError::SourceNotConformant { .. }));
}

#[test]
fn default_filled_for_new_required_attribute() {
    let mm_src = load_metamodel(&corpus("threads/softarch-v1.mm.json")).unwrap();
    let mut mm_dst = mm_src.clone();
    mm_dst.version = "9".into();
    let component = mm_dst.classes.iter_mut().find(|c| c.name == "Component").unwrap();
    component.attributes.push(evolvekit_core::MAttribute {
        name: "weight".into(),
        ty: evolvekit_core::PrimType::Int,
        required: true,
        default: Some(evolvekit_core::Literal::Int(1)),
    });
    let spec = parse_mcl("delta \"id\" from softarch 1 to softarch 9", &mm_src, &mm_dst).unwrap();
    let input = load_model(&corpus("threads/arch.model.json")).unwrap();
    let (output, report) = migrate_model(&input, &spec, &mm_src, &mm_dst).unwrap();
    assert_eq!(output.object("ui").unwrap().attributes["weight"], evolvekit_core::Literal::Int(1));
    assert!(report
        .warnings
        .iter()
        .any(|w| w.code == evolvekit_mcl::WarningCode::DefaultFilled));
}

#[test]
fn association_rename_carries_links_over() {
    let mm_src = load_metamodel(
        r#"{"name":"m","version":"1",
            "classes":[{"name":"X"},{"name":"Y"}],
            "associations":[{"name":"old","src":"X","dst":"Y","srcRole":"s","dstRole":"d"}]}"#,
    )
    .unwrap();
    let mm_dst = load_metamodel(
        r#"{"name":"m","version":"2",
            "classes":[{"name":"X"},{"name":"Y"}],
            "associations":[{"name":"new","src":"X","dst":"Y","srcRole":"s","dstRole":"d"}]}"#,
    )
    .unwrap();
    let spec = parse_mcl("delta \"rn\" from m 1 to m 2\nmap assoc old => new", &mm_src, &mm_dst)
        .unwrap();
    let input = load_model(
        r#"{"metamodel":"m","metamodelVersion":"1","roots":["x1","y1"],
            "objects":[{"id":"x1","class":"X"},{"id":"y1","class":"Y"}],
            "links":[{"id":"l1","assoc":"old","src":"x1","dst":"y1"}]}"#,
    )
    .unwrap();
    let (output, report) = migrate_model(&input, &spec, &mm_src, &mm_dst).unwrap();
    assert_eq!(output.links.len(), 1);
    assert_eq!(output.links[0].association, "new");
    assert!(report.dropped_links.is_empty());
    assert!(check_conformance(&output, &mm_dst).conformant());
}

#[test]
fn reparent_without_matching_ancestor_is_incomplete() {
    let mm_src = load_metamodel(&corpus("reparent/org-v1.mm.json")).unwrap();
    let mm_dst = load_metamodel(&corpus("reparent/org-v2.mm.json")).unwrap();
    let spec = parse_mcl(&corpus("reparent/reparent.mcl"), &mm_src, &mm_dst).unwrap();
    // A Class instance at root level has no ParentParent ancestor.
    let input = load_model(
        r#"{"metamodel":"org","metamodelVersion":"1","roots":["stray"],
            "objects":[{"id":"stray","class":"Class","attrs":{"name":"s"}}]}"#,
    )
    .unwrap();
    let err = migrate_model(&input, &spec, &mm_src, &mm_dst).unwrap_err();
    assert!(matches!(err, MclError::Incomplete { .. }), "{err}");
}
