//! End-to-end subcommand tests against the shipped corpus: exit codes,
//! report contents, and output files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn builtin(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../builtin")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn out_path(name: &str) -> String {
    let dir = std::env::temp_dir().join(format!("evolvekit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evolvekit"))
        .args(args)
        .env_remove("EVOLVEKIT_FORMAT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_conformant_pair_exits_zero() {
    let out = run(&[
        "validate",
        "--metamodel",
        &corpus("portsplit/components-v1.mm.json"),
        "--model",
        &corpus("portsplit/net.model.json"),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("conformant"));
}

#[test]
fn validate_against_evolved_metamodel_exits_two() {
    let out = run(&[
        "validate",
        "--metamodel",
        &corpus("portsplit/components-v2.mm.json"),
        "--model",
        &corpus("portsplit/net.model.json"),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("ABSTRACT_INSTANTIATION"));
}

#[test]
fn check_reports_counterexamples_and_exits_two() {
    let out = run(&[
        "check",
        "--metamodel",
        &corpus("portsplit/components-v1.mm.json"),
        "--model",
        &corpus("portsplit/dupports.model.json"),
        "--constraints",
        &corpus("portsplit/portsplit.constraints"),
    ]);
    assert_eq!(code(&out), 2);
    let text = stdout(&out);
    assert!(text.contains("c=c1 p1=x p2=y"));
    assert!(text.contains("c=c1 p1=y p2=x"));
    assert!(text.contains("Port names unique per component"));
}

#[test]
fn check_phase_filter_can_skip_everything() {
    let out = run(&[
        "check",
        "--metamodel",
        &corpus("portsplit/components-v1.mm.json"),
        "--model",
        &corpus("portsplit/dupports.model.json"),
        "--constraints",
        &corpus("portsplit/portsplit.constraints"),
        "--phase",
        "exit",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("ALL CONSTRAINTS SATISFIED"));
}

#[test]
fn check_json_is_parseable() {
    let out = run(&[
        "check",
        "--format",
        "json",
        "--metamodel",
        &corpus("portsplit/components-v1.mm.json"),
        "--model",
        &corpus("portsplit/dupports.model.json"),
        "--constraints",
        &corpus("portsplit/portsplit.constraints"),
    ]);
    assert_eq!(code(&out), 2);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["valid"], serde_json::Value::Bool(false));
    assert_eq!(v["results"][0]["counterexamples"].as_array().unwrap().len(), 2);
}

#[test]
fn migrate_then_check_pipeline_exits_zero_twice() {
    let migrated = out_path("arch-v2.model.json");
    let m = run(&[
        "migrate",
        "--from",
        &corpus("threads/softarch-v1.mm.json"),
        "--to",
        &corpus("threads/softarch-v2.mm.json"),
        "--delta",
        &corpus("threads/thread-add.mcl"),
        "--model",
        &corpus("threads/arch.model.json"),
        "--out",
        &migrated,
    ]);
    assert_eq!(code(&m), 0, "{}", String::from_utf8_lossy(&m.stderr));
    let c = run(&[
        "check",
        "--metamodel",
        &corpus("threads/softarch-v2.mm.json"),
        "--model",
        &migrated,
        "--constraints",
        &corpus("threads/threads.constraints"),
    ]);
    assert_eq!(code(&c), 0, "{}", stdout(&c));
    assert!(stdout(&c).contains("ALL CONSTRAINTS SATISFIED"));
}

#[test]
fn strict_migration_with_warnings_exits_three_without_output() {
    let out_file = out_path("lab-strict.model.json");
    let out = run(&[
        "migrate",
        "--from",
        &corpus("condsplit/devices-v1.mm.json"),
        "--to",
        &corpus("condsplit/devices-v2.mm.json"),
        "--delta",
        &corpus("condsplit/cond-split.mcl"),
        "--model",
        &corpus("condsplit/lab.model.json"),
        "--out",
        &out_file,
        "--strict",
    ]);
    assert_eq!(code(&out), 3);
    assert!(!Path::new(&out_file).exists(), "no partial output on failure");
}

#[test]
fn migrate_rules_writes_patched_graph() {
    let out_file = out_path("rules-v2.json");
    let out = run(&[
        "migrate-rules",
        "--from",
        &corpus("portsplit/components-v1.mm.json"),
        "--to",
        &corpus("portsplit/components-v2.mm.json"),
        "--delta",
        &corpus("portsplit/port-split.mcl"),
        "--dest",
        &corpus("rules/runtime.mm.json"),
        "--rules",
        &corpus("rules/interp.rules.json"),
        "--out",
        &out_file,
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("W_AMBIGUOUS_MAPPING"));
    let saved = std::fs::read_to_string(&out_file).unwrap();
    let v: serde_json::Value = serde_json::from_str(&saved).unwrap();
    assert_eq!(v["rules"].as_array().unwrap().len(), 2);
}

#[test]
fn merge_with_conflicts_exits_four_and_writes_merged_model() {
    let mm = out_path("merge-mm.json");
    let base = out_path("merge-base.json");
    let left = out_path("merge-left.json");
    let right = out_path("merge-right.json");
    let merged = out_path("merge-out.json");
    std::fs::write(
        &mm,
        r#"{"name":"m","version":"1","classes":[
            {"name":"Component","attributes":[
              {"name":"name","type":"string"},
              {"name":"kind","type":"string"},
              {"name":"rev","type":"int"}]}]}"#,
    )
    .unwrap();
    // Objects need stable context beyond the divergent attribute for the
    // similarity matcher to pair them up.
    let model = |name: &str| {
        format!(
            r#"{{"metamodel":"m","metamodelVersion":"1","roots":["c"],
                "objects":[{{"id":"c","class":"Component",
                             "attrs":{{"name":"{name}","kind":"ctrl","rev":7}}}}]}}"#
        )
    };
    std::fs::write(&base, model("base")).unwrap();
    std::fs::write(&left, model("left")).unwrap();
    std::fs::write(&right, model("right")).unwrap();
    let out = run(&[
        "merge",
        "--metamodel",
        &mm,
        "--base",
        &base,
        "--left",
        &left,
        "--right",
        &right,
        "--out",
        &merged,
    ]);
    assert_eq!(code(&out), 4, "{}", stdout(&out));
    assert!(stdout(&out).contains("attr-attr"));
    let saved = std::fs::read_to_string(&merged).unwrap();
    assert!(saved.contains("\"name\": \"base\""), "base value retained:\n{saved}");
}

#[test]
fn refactor_flatten_produces_conformant_flat_chart() {
    let chart = out_path("chart.json");
    std::fs::write(
        &chart,
        r#"{
          "metamodel": "statechart", "metamodelVersion": "1",
          "roots": ["A", "B", "t"],
          "objects": [
            {"id": "A", "class": "State", "attrs": {"initial": true},
             "children": {"states": ["a1", "a2"]}},
            {"id": "a1", "class": "State", "attrs": {"initial": true}},
            {"id": "a2", "class": "State", "attrs": {"initial": false}},
            {"id": "B", "class": "State", "attrs": {"initial": false}},
            {"id": "t", "class": "Transition", "attrs": {"event": "go"}}
          ],
          "links": [
            {"id": "t.s", "assoc": "source", "src": "t", "dst": "A"},
            {"id": "t.t", "assoc": "target", "src": "t", "dst": "B"}
          ]
        }"#,
    )
    .unwrap();
    let flat = out_path("chart-flat.json");
    let out = run(&["refactor", "flatten", "--model", &chart, "--out", &flat]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = run(&["validate", "--metamodel", &builtin("statechart.mm.json"), "--model", &flat]);
    assert_eq!(code(&v), 0);
}

#[test]
fn usage_errors_exit_one() {
    let unknown_flag = run(&["validate", "--bogus"]);
    assert_eq!(code(&unknown_flag), 1);
    let missing_file = run(&[
        "validate",
        "--metamodel",
        "/nonexistent/mm.json",
        "--model",
        "/nonexistent/m.json",
    ]);
    assert_eq!(code(&missing_file), 1);
    let missing_refactor_args = run(&[
        "refactor",
        "push-down",
        "--model",
        &corpus("portsplit/net.model.json"),
        "--out",
        &out_path("never.json"),
    ]);
    assert_eq!(code(&missing_refactor_args), 1);
}

#[test]
fn format_env_variable_sets_the_default() {
    let out = Command::new(env!("CARGO_BIN_EXE_evolvekit"))
        .args([
            "validate",
            "--metamodel",
            &corpus("portsplit/components-v1.mm.json"),
            "--model",
            &corpus("portsplit/net.model.json"),
        ])
        .env("EVOLVEKIT_FORMAT", "json")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["conformant"], serde_json::Value::Bool(true));
}
