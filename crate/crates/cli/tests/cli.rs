//! The binary end to end: exit codes, emitted JSON and `verify`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).display().to_string()
}

fn seqlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqlab")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn lineability_certificate() {
    let o = seqlab(&["lineability", "--ratios", "1/2,1/3"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["payload"]["rank"], 2);
}

#[test]
fn eps_above_threshold_is_a_config_error() {
    let o = seqlab(&[
        "construct-lp",
        "--fixture",
        &fixture("l2_decaying_40.json"),
        "--eps",
        "0.125",
    ]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("4/33"));
}

#[test]
fn two_dim_fixture_is_a_model_limit() {
    let o = seqlab(&["construct-lp", "--fixture", &fixture("l2_two_dim.json"), "--depth", "5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension exhausted"));
}

#[test]
fn space_override_needs_p() {
    let o = seqlab(&[
        "construct-lp",
        "--fixture",
        &fixture("l2_decaying_40.json"),
        "--space",
        "lp",
    ]);
    assert_eq!(code(&o), 3);
    let o = seqlab(&[
        "construct-lp",
        "--fixture",
        &fixture("coordinate_l1_40.json"),
        "--space",
        "lp",
        "--p",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["payload"]["space"]["p"], 3.0);
}

#[test]
fn verify_round_trip_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("b.json");
    let o = seqlab(&[
        "construct-lp",
        "--fixture",
        &fixture("l2_decaying_40.json"),
        "--out",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&seqlab(&["verify", cert.to_str().unwrap()])), 0);

    // l_{s_2}(s_1) = 0.1
    let mut v = read_json(&cert);
    assert_eq!(v["kind"], "lemma_b");
    let s1 = v["payload"]["s"][0].as_u64().unwrap() as usize;
    v["payload"]["l"][1]["coords"][s1 - 1] = Value::from(0.1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let o = seqlab(&["verify", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("FAIL l_zero[2, 1]"), "{text}");

    let full = std::fs::read_to_string(&cert).unwrap();
    let cut = dir.path().join("cut.json");
    std::fs::write(&cut, &full[..full.len() / 2]).unwrap();
    let o = seqlab(&["verify", cut.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("malformed certificate"));
}

#[test]
fn same_seed_same_bytes() {
    let args = ["density", "--fixture", &fixture("c0_decaying_32.json"), "--seed", "5"];
    let a = seqlab(&args);
    let b = seqlab(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn batch_runs_scenarios_in_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = root().join("scenarios");
    let mut paths: Vec<String> = std::fs::read_dir(&scenarios)
        .unwrap()
        .map(|e| e.unwrap().path().display().to_string())
        .collect();
    paths.sort();
    let mut args = vec!["batch", "--jobs", "3", "--out-dir", dir.path().to_str().unwrap()];
    args.extend(paths.iter().map(String::as_str));
    assert_eq!(code(&seqlab(&args)), 0);
    let emitted: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path().display().to_string())
        .collect();
    assert_eq!(emitted.len(), paths.len());
    let mut args = vec!["verify"];
    args.extend(emitted.iter().map(String::as_str));
    assert_eq!(code(&seqlab(&args)), 0);
}

#[test]
fn batch_reports_the_worst_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"pipeline": "lp", "params": {"epsilon": 0.1}}"#).unwrap();
    let good = root().join("scenarios/lineability_half_third.json");
    let o = seqlab(&[
        "batch",
        "--out-dir",
        dir.path().to_str().unwrap(),
        good.to_str().unwrap(),
        bad.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
}
