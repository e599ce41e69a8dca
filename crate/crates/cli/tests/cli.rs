use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kred_core::parse_model;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn kred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kred"))
        .args(args)
        .env_remove("KRED_SEED")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_model(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("model.ka");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_accepts_the_operator_model() {
    let out = kred(&["validate", s(&fixture("fig1_operator.ka"))]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bind: binding("), "{text}");
    assert!(text.contains("produce: creation(P"), "{text}");
}

#[test]
fn validate_reports_a_dangling_bond() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "%agent: A(x)\nr: A(x!1) -> A(x) @ 1\n");
    let out = kred(&["validate", s(&model)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("error[E301]") && err.contains(":2:"), "{err}");
}

#[test]
fn validate_reports_an_undeclared_agent() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "%agent: A(x)\nr: B() -> A(x) @ 1\n");
    let out = kred(&["validate", s(&model)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("error[E201]"));
}

#[test]
fn missing_file_is_a_model_error() {
    let out = kred(&["validate", "/nonexistent/model.ka"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("error[E001]"));
}

#[test]
fn reduce_writes_a_round_trippable_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = kred(&["reduce", s(&fixture("lambda_subnetwork_reconstructed.ka")), "--out", s(dir.path())]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rules_before"], 10);
    assert_eq!(report["rules_after"], 4);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"reduced.ka\"") && manifest.contains("\"report.json\""));

    // A second reduction of the output changes nothing.
    let again = tempfile::tempdir().unwrap();
    let out = kred(&["reduce", s(&dir.path().join("reduced.ka")), "--out", s(again.path())]);
    assert!(out.status.success());
    let first = std::fs::read_to_string(dir.path().join("reduced.ka")).unwrap();
    let second = std::fs::read_to_string(again.path().join("reduced.ka")).unwrap();
    assert_eq!(parse_model(&first).unwrap(), parse_model(&second).unwrap());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(again.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["steps"].as_array().unwrap().len(), 0);
}

#[test]
fn disabling_enzymatic_keeps_the_mm_model() {
    let out = kred(&["reduce", s(&fixture("mm.ka")), "--disable", "enzymatic", "--format", "json"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let original = parse_model(&std::fs::read_to_string(fixture("mm.ka")).unwrap()).unwrap();
    let split = text.find('{').unwrap();
    let reduced = parse_model(&text[..split]).unwrap();
    assert_eq!(reduced.rules, original.rules);
    let report: serde_json::Value = serde_json::from_str(&text[split..]).unwrap();
    assert_eq!(report["steps"].as_array().unwrap().len(), 0);
}

#[test]
fn unknown_pass_is_a_usage_error() {
    let out = kred(&["reduce", s(&fixture("mm.ka")), "--disable", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = kred(&["simulate", s(&fixture("mm.ka")), "--runs", "1", "--seed", "7", "--out", s(d.path())]);
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("P.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn seed_falls_back_to_the_environment() {
    let with_flag = kred(&["simulate", s(&fixture("mm.ka")), "--runs", "3", "--seed", "11"]);
    let with_env = Command::new(env!("CARGO_BIN_EXE_kred"))
        .args(["simulate", s(&fixture("mm.ka")), "--runs", "3"])
        .env("KRED_SEED", "11")
        .output()
        .unwrap();
    assert!(with_flag.status.success());
    assert_eq!(with_flag.stdout, with_env.stdout);
}

#[test]
fn zero_runs_is_a_usage_error() {
    let out = kred(&["simulate", s(&fixture("mm.ka")), "--runs", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = kred(&["simulate", s(&fixture("mm.ka")), "--runs", "5", "--grid", "100", "--out", s(dir.path())]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("P.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "time,mean,std");
    assert_eq!(lines.len(), 101);
}

#[test]
fn simulate_json_summary() {
    let out = kred(&["simulate", s(&fixture("dimer.ka")), "--runs", "4", "--grid", "3", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["runs"], 4);
    assert_eq!(v["grid"].as_array().unwrap().len(), 3);
}

#[test]
fn comparing_a_model_with_itself_is_close() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture("mm.ka");
    let out = kred(&["compare", s(&m), "--reduced", s(&m), "--runs", "2000", "--t-end", "5", "--grid", "5", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("P.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,mean_orig,std_orig,mean_red,std_red,bhattacharyya"));
    for line in lines {
        let d: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(d < 0.01, "{line}");
    }
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 0"));
}

#[test]
fn nothing_to_compare() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "%agent: A()\n%init: 5 A()\n%obs: 'A' A()\nd: A() -> . @ 1\n");
    let out = kred(&["compare", s(&model)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nothing to compare"));
}

#[test]
fn scaled_operator_model_is_closer() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture("fig1_operator.ka");
    let out = kred(&["compare", s(&model), "--scale", "1,10", "--runs", "1000", "--t-end", "10", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("scaling_P.csv")).unwrap();
    assert!(table.starts_with("time,N=1,N=10\n"));
    let summary = std::fs::read_to_string(dir.path().join("scaling.csv")).unwrap();
    let averages: Vec<f64> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(averages.len(), 2);
    assert!(averages[1] < averages[0], "{summary}");
}

#[test]
fn runtime_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "%agent: A()\n%init: 1 A()\n%obs: 'A' A()\nd: A() -> . @@ 0 - 1\n");
    let out = kred(&["simulate", s(&model), "--runs", "1"]);
    assert_eq!(out.status.code(), Some(3));
}
