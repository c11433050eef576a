use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn dfssd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfssd"))
        .args(args)
        .env_remove("DFSSD_TIME_BUDGET")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Lock the detector with a 2-bit clock tracer on pattern 1011.
fn lock_detector(dir: &Path) -> PathBuf {
    let out = dir.join("det");
    let o = dfssd(&["obfuscate", s(&data("detector011.bench")), "-o", s(&out), "--df", "2", "--pattern", "1011"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("key 1011"));
    assert!(stdout(&o).contains("bound 4"));
    out.with_extension("bench")
}

#[test]
fn parse_reports_interface() {
    let o = dfssd(&["parse", s(&data("s27.bench"))]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["inputs"], 4);
    assert_eq!(v["outputs"], 1);
    assert_eq!(v["flipflops"], 3);
    let o = dfssd(&["parse", s(&data("five_state.kiss"))]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["source"]["kind"], "fsm");
}

#[test]
fn obfuscate_then_attack_recovers_key() {
    let dir = tempfile::tempdir().unwrap();
    let locked = lock_detector(dir.path());
    assert_eq!(std::fs::read_to_string(dir.path().join("det.key")).unwrap().trim(), "1011");
    let report = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = dfssd(&[
        "attack", s(&locked), "--oracle-key", "1011", "--b0", "1", "--step", "1",
        "--json", s(&report), "--csv", s(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["termination"], "UC");
    assert_eq!(v["key"], "1011");
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("iteration,boundary,dis_len,time_s"));
    assert_eq!(rows.lines().count(), 1 + v["dis_log"].as_array().unwrap().len());
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let locked = lock_detector(dir.path());
    let orig = data("detector011.bench");
    let o = dfssd(&["verify", s(&orig), s(&locked), "--key-b", "1011"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("equivalent"));
    let o = dfssd(&["verify", s(&orig), s(&locked), "--key-b", "0000"]);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).starts_with("different"));
}

#[test]
fn simulate_is_seeded() {
    let a = dfssd(&["simulate", s(&data("s27.bench")), "--random", "12", "--seed", "3"]);
    let b = dfssd(&["simulate", s(&data("s27.bench")), "--random", "12", "--seed", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 12);
}

#[test]
fn reach_lists_urs() {
    let o = dfssd(&["reach", s(&data("five_state.kiss")), "--urs", "--certify", "101"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["complete"], true);
    assert_eq!(v["urs"]["hd"], 1);
    assert!(v["certificate"].get("ProvenUnreachable").is_some(), "{v}");
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(code(&dfssd(&["frobnicate"])), 1);
    assert_eq!(code(&dfssd(&["attack"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.bench");
    assert_eq!(code(&dfssd(&["parse", s(&missing)])), 2);
    let bad = dir.path().join("bad.bench");
    std::fs::write(&bad, "INPUT(a)\nOUTPUT(y)\ny = FROB(a)\n").unwrap();
    let o = dfssd(&["parse", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("error"));
    // Key of the wrong width.
    let locked = lock_detector(dir.path());
    assert_eq!(code(&dfssd(&["attack", s(&locked), "--oracle-key", "10"])), 1);
}

#[test]
fn exhausted_budget_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s27");
    let o = dfssd(&["obfuscate", s(&data("s27.bench")), "-o", s(&out), "--df", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let key = std::fs::read_to_string(out.with_extension("key")).unwrap();
    let o = dfssd(&["attack", s(&out.with_extension("bench")), "--oracle-key", key.trim(), "--conflicts", "1", "--max-boundary", "2"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn empty_transform_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("same");
    let o = dfssd(&["obfuscate", s(&data("s27.bench")), "-o", s(&out), "--ssd", "0"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn empty_manifest_runs() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    std::fs::write(&m, r#"{"circuits": [], "schemes": []}"#).unwrap();
    let csv = dir.path().join("out.csv");
    let o = dfssd(&["bench", s(&m), "--csv", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap().trim(),
        "circuit,scheme,iterations,last_dis_len,time_s,termination"
    );
}

#[test]
fn small_bench_table() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let c = data("s27.bench");
    std::fs::write(
        &m,
        format!(r#"{{"circuits": ["{}"], "schemes": ["ssd:1", "df:2"], "boundary_step": 1}}"#, s(&c)),
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let o = dfssd(&["bench", s(&m), "--csv", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows: Vec<String> = std::fs::read_to_string(&csv).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("s27,SSD1,") && rows[1].ends_with(",UMC"), "{}", rows[1]);
    assert!(rows[2].starts_with("s27,DF2,") && rows[2].ends_with(",UC"), "{}", rows[2]);
}
