use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sketchbench"));
    c.env_remove("SKETCHBENCH_THREADS");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> (Output, Option<Value>) {
    let report = dir.join("report.json");
    let _ = std::fs::remove_file(&report);
    let out = bin().current_dir(dir).args(args).arg("--report").arg(&report).output().unwrap();
    let json = std::fs::read_to_string(&report).ok().map(|s| serde_json::from_str(&s).unwrap());
    (out, json)
}

#[test]
fn jl_bounds_reports_minimum_dimension() {
    let out = bin().args(["jl-bounds", "--n", "1000", "--epsilon", "0.2"]).output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["subcommand"], "jl-bounds");
    assert_eq!(v["results"]["p_min"], 1595);
    assert_eq!(v["config"]["seed"], 0);
    assert!(v["timings"].is_object());
}

#[test]
fn unknown_subcommand_exits_two_with_usage() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_parameters_exit_two_without_report() {
    let dir = TempDir::new().unwrap();
    let (out, report) = run_in(dir.path(), &["jl-bounds", "--n", "10", "--epsilon", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(report.is_none());
    let (out, _) = run_in(dir.path(), &["rks", "train", "--activation", "tanh", "--model", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identity_projection_has_zero_violations() {
    let dir = TempDir::new().unwrap();
    let (out, r) = run_in(dir.path(), &["jl-verify", "--identity", "--n", "40", "--d", "30"]);
    assert!(out.status.success());
    let r = r.unwrap();
    assert_eq!(r["results"]["pairs_below"], 0);
    assert_eq!(r["results"]["pairs_above"], 0);
    assert_eq!(r["results"]["max_distortion"], 0.0);
}

#[test]
fn config_echo_includes_defaults() {
    let dir = TempDir::new().unwrap();
    let (_, r) = run_in(dir.path(), &["tail-check", "--trials", "1000", "--seed", "9"]);
    let cfg = &r.unwrap()["config"];
    assert_eq!(cfg["seed"], 9);
    let tc = &cfg["command"]["tail-check"];
    assert_eq!(tc["p"], 20);
    assert_eq!(tc["d"], 400);
    assert_eq!(tc["beta"], 0.5);
    assert_eq!(tc["trials"], 1000);
}

#[test]
fn csv_input_and_output() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("a,b,c,d\n");
    for i in 0..12 {
        csv.push_str(&format!("{},{},{},{}\n", i, i * i, (i as f64).sin(), 1.0 / (i as f64 + 1.0)));
    }
    std::fs::write(dir.path().join("x.csv"), csv).unwrap();
    let (out, r) = run_in(
        dir.path(),
        &["jl-verify", "--input", "x.csv", "--p", "3", "--epsilon", "0.9", "--output", "y.csv"],
    );
    assert!(matches!(out.status.code(), Some(0 | 3)));
    let r = r.unwrap();
    assert_eq!(r["results"]["n"], 12);
    assert_eq!(r["results"]["d"], 4);
    let written = std::fs::read_to_string(dir.path().join("y.csv")).unwrap();
    assert_eq!(written.lines().count(), 12);
    assert!(written.lines().all(|l| l.split(',').count() == 3));
}

#[test]
fn ragged_csv_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("x.csv"), "1,2\n3,4\n5\n").unwrap();
    let (out, _) = run_in(dir.path(), &["rff", "--input", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn failed_verification_exits_three_with_report() {
    let dir = TempDir::new().unwrap();
    // Two dimensions cannot keep 4-sparse vectors within 10% of their length.
    let (out, r) = run_in(dir.path(), &["rip-check", "--p", "2", "--epsilon", "0.1", "--trials", "200"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(r.unwrap()["results"]["holds"], false);
}

#[test]
fn rks_train_then_predict() {
    let dir = TempDir::new().unwrap();
    let (out, r) = run_in(dir.path(), &["rks", "train", "--model", "m.json", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(r.unwrap()["results"]["train_accuracy"].as_f64().unwrap() >= 0.9);
    let model: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(model["activation"], "cos");
    assert_eq!(model["p"], 200);
    let (out, r) = run_in(dir.path(), &["rks", "predict", "--model", "m.json", "--output", "pred.csv"]);
    assert!(out.status.success());
    assert!(r.unwrap()["results"]["accuracy"].as_f64().unwrap() >= 0.9);
    assert_eq!(std::fs::read_to_string(dir.path().join("pred.csv")).unwrap().lines().count(), 400);
}

#[test]
fn ensemble_train_then_predict_from_files() {
    let dir = TempDir::new().unwrap();
    let mut x = String::new();
    let mut y = String::new();
    for i in 0..60 {
        let c = i % 2;
        let shift = if c == 0 { -3.0 } else { 3.0 };
        x.push_str(&format!("{},{},{}\n", shift + (i as f64 * 0.37).sin(), (i as f64).cos(), (i as f64 * 1.7).sin()));
        y.push_str(&format!("{c}\n"));
    }
    std::fs::write(dir.path().join("x.csv"), &x).unwrap();
    std::fs::write(dir.path().join("y.csv"), &y).unwrap();
    let (out, r) = run_in(dir.path(), &["ensemble", "train", "--train", "x.csv,y.csv", "--m", "5", "--p", "2", "--model", "e.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(r.unwrap()["results"]["members"], 5);
    let (out, r) = run_in(
        dir.path(),
        &["ensemble", "predict", "--model", "e.json", "--input", "x.csv", "--labels", "y.csv"],
    );
    assert!(out.status.success());
    assert!(r.unwrap()["results"]["scores"]["accuracy"].as_f64().unwrap() >= 0.9);
}

#[test]
fn ann_build_and_query_binary_files() {
    let dir = TempDir::new().unwrap();
    let rows: Vec<String> = (0..20u32)
        .map(|i| (0..32).map(|b| ((i.wrapping_mul(2654435761) >> (b % 32)) & 1).to_string()).collect::<Vec<_>>().join(","))
        .collect();
    std::fs::write(dir.path().join("data.csv"), rows.join("\n") + "\n").unwrap();
    std::fs::write(dir.path().join("q.csv"), rows[..5].join("\n") + "\n").unwrap();
    let (out, _) = run_in(dir.path(), &["ann", "build", "--input", "data.csv", "--binary", "--index", "i.hcub"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read(dir.path().join("i.hcub")).unwrap().starts_with(b"HCUB1"));
    let (out, r) = run_in(dir.path(), &["ann", "query", "--index", "i.hcub", "--queries", "q.csv", "--binary"]);
    assert!(out.status.success());
    let r = r.unwrap();
    assert_eq!(r["results"]["soundness_failures"], 0);
    for a in r["results"]["answers"].as_array().unwrap() {
        assert_eq!(a["distance"], 0);
    }
}

#[test]
fn threads_flag_and_env_do_not_change_results() {
    let dir = TempDir::new().unwrap();
    let args = ["tail-check", "--trials", "2000", "--threads", "1"];
    let (_, a) = run_in(dir.path(), &args);
    let report = dir.path().join("b.json");
    let out = bin()
        .env("SKETCHBENCH_THREADS", "2")
        .args(["tail-check", "--trials", "2000", "--report"])
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success());
    let b: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(a.unwrap()["results"], b["results"]);
    assert_eq!(b["config"]["threads"], 2);
}
