use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn majorant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_majorant"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

const CONE: &str = r#"{"kind":"cone","apex":[0.5,0.5],"height":0.3,"slope":1.0}"#;

#[test]
fn tails_depth_zero_two_layers() {
    let dir = tempfile::tempdir().unwrap();
    let out = majorant(&["tails", "--seed-square", "0,0,0", "--pmax", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("tails.svg")).unwrap();
    assert_eq!(svg.matches("<rect ").count(), 1 + 32 + 432);
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["schema"], "majorant-report/1");
    assert_eq!(check(&r, "tail-layer-counts")["details"]["measured"], serde_json::json!([1, 32, 432]));
}

#[test]
fn render_single_layer_tail() {
    let dir = tempfile::tempdir().unwrap();
    let out = majorant(&["render", "--pmax", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("render.svg")).unwrap();
    assert_eq!(svg.matches("<rect ").count(), 33);
}

#[test]
fn render_family_from_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("family.toml");
    std::fs::write(&scenario, "command = \"render\"\nseeds = [[3, 1, 1], [4, 11, 9], [5, 6, 25]]\n").unwrap();
    let out = majorant(&["render", scenario.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("render.svg")).unwrap();
    assert_eq!(svg.matches("{ fill:").count(), 3);
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(
        svg.matches("<rect ").count() as f64,
        check(&r, "family")["value"].as_f64().unwrap()
    );
}

#[test]
fn local_cone_report_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let build = dir.path().join("build");
    let out = majorant(&["local", "--function", CONE, "--delta", "1", "--out", build.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = build.join("report.json");
    let r = read_json(&path);
    for name in ["support", "domination", "riesz-lipschitz", "integral"] {
        assert_eq!(check(&r, name)["status"], "pass", "{name}");
    }
    assert!(r["artifacts"]["majorant"]["terms"].as_array().is_some_and(|t| !t.is_empty()));

    let replay = dir.path().join("replay");
    let out = majorant(&["verify", path.to_str().unwrap(), "--out", replay.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(replay.join("report.json")).unwrap()
    );
}

#[test]
fn report_exit_status_follows_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = majorant(&["tails", "--pmax", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let path = dir.path().join("report.json");
    let ok = majorant(&["report", path.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("overall PASS"));

    let mut r = read_json(&path);
    r["checks"][0]["status"] = "fail".into();
    r["passed"] = false.into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&r).unwrap()).unwrap();
    let out = majorant(&["report", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_input_is_an_error() {
    let out = majorant(&["tails", "--lambda", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = majorant(&["local"]);
    assert_eq!(out.status.code(), Some(2));
    let out = majorant(&["local", "--function", CONE, "--delta", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_majorant"))
            .args(["tails", "--pmax", "2"])
            .env("MAJORANT_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        let mut r: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(r["environment"]["threads"].as_u64().unwrap().to_string(), threads);
        r.as_object_mut().unwrap().remove("environment");
        r
    };
    assert_eq!(run("1"), run("3"));
}
