use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn sidewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sidewalk")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn generate(dir: &Path) {
    let out = sidewalk(&[
        "generate",
        "--rows", "1",
        "--cols", "1",
        "--segment-length", "14",
        "--addresses", "2",
        "--seed", "3",
        "--out", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_then_inspect() {
    let tmp = tempfile::tempdir().unwrap();
    let world = tmp.path().join("world");
    generate(&world);
    let report = tmp.path().join("report");
    let w = world.to_str().unwrap();
    let summary = stdout_json(&sidewalk(&["inspect", "--world", w, "--json", "--out", report.to_str().unwrap()]));
    assert_eq!(summary["intersections"], 1);
    assert_eq!(summary["street_segments"], 4);
    assert_eq!(summary["addresses"], 16);
    assert!(summary["nodes"].as_u64().unwrap() > 40);
    let saved: Value = serde_json::from_slice(&std::fs::read(report.join("inspect.json")).unwrap()).unwrap();
    assert_eq!(saved, summary);
    let text = sidewalk(&["inspect", "--world", w]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("is valid"));
    // same seed, same bundle
    let again = tmp.path().join("again");
    generate(&again);
    let hash = |dir: &Path| stdout_json(&sidewalk(&["inspect", "--world", dir.to_str().unwrap(), "--json"]))["content_hash"].clone();
    assert_eq!(hash(&world), hash(&again));
}

#[test]
fn exit_codes() {
    assert_eq!(sidewalk(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sidewalk(&["inspect"]).status.code(), Some(1));
    assert_eq!(sidewalk(&["--help"]).status.code(), Some(0));
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path());
    let ann = tmp.path().join("annotations.json");
    let mut bytes = std::fs::read(&ann).unwrap();
    bytes.push(b' ');
    std::fs::write(&ann, bytes).unwrap();
    let out = sidewalk(&["inspect", "--world", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hash"));
    let missing = tmp.path().join("nowhere");
    assert_eq!(sidewalk(&["inspect", "--world", missing.to_str().unwrap()]).status.code(), Some(1));
    let bad = sidewalk(&["generate", "--rows", "0", "--cols", "2", "--out", tmp.path().join("x").to_str().unwrap()]);
    // a bad generation spec is a usage problem, not a broken bundle
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn rollout_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let report = stdout_json(&sidewalk(&["rollout", "--policy", "oracle", "--episodes", "20", "--seed", "4", "--out", out, "--json"]));
    assert_eq!(report["aggregate"]["success_rate"], 1.0);
    let csv = std::fs::read_to_string(tmp.path().join("rollout.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
    let saved: Value = serde_json::from_slice(&std::fs::read(tmp.path().join("rollout.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
    let text = sidewalk(&["rollout", "--episodes", "5"]);
    assert!(String::from_utf8_lossy(&text.stdout).starts_with("random on AllObs: 5 episodes"));
}

#[test]
fn bench_reports_both_modes() {
    let reports = stdout_json(&sidewalk(&["bench", "--steps", "2000", "--json"]));
    let modes: Vec<bool> = reports.as_array().unwrap().iter().map(|r| r["observe"].as_bool().unwrap()).collect();
    assert_eq!(modes, [true, false]);
}

#[test]
fn serve_over_stdio() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_sidewalk"))
        .args(["serve", "--seed", "2"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    stdin
        .write_all(b"{\"id\":1,\"cmd\":\"reset\",\"task\":\"NoImg\",\"seed\":0}\n{\"id\":2,\"cmd\":\"step\",\"action\":2}\n{\"id\":3,\"cmd\":\"close\"}\n")
        .unwrap();
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0]["obs"]["gps"].is_array());
    assert!(lines[0]["obs"].get("image").is_none());
    assert_eq!(lines[1]["id"], 2);
    assert_eq!(lines[2]["closed"], true);
}
