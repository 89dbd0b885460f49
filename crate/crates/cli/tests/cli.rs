//! End-to-end runs of the `annuli` binary.

use serde_json::Value;
use std::process::{Command, Output};

fn annuli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annuli"))
        .args(args)
        .env("ANNULI_LOG", "error")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn close(v: &Value, x: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - x).abs() <= tol
}

#[test]
fn euclidean_bound() {
    let v = json(&annuli(&["bound", "--metric", "euclidean", "--tau", "0.5", "--sigma", "1"]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "bound");
    assert!(close(&v["r_star"], 2.0 - 3f64.sqrt(), 1e-11));
}

#[test]
fn power_metric_parameter() {
    let v = json(&annuli(&["solve-c", "--metric", "inverse_radius", "--tau", "0.5", "--sigma", "1", "--r", "0.25"]));
    assert!(close(&v["c"], -0.75, 1e-10));
}

#[test]
fn exit_codes() {
    // missing metric
    assert_eq!(annuli(&["bound", "--tau", "0.5", "--sigma", "1"]).status.code(), Some(1));
    assert_eq!(annuli(&["frobnicate"]).status.code(), Some(1));
    // τ > σ
    assert_eq!(annuli(&["bound", "--metric", "euclidean", "--tau", "1", "--sigma", "0.5"]).status.code(), Some(2));
    // fat regime has no extremal profile
    assert_eq!(
        annuli(&["solve-c", "--metric", "euclidean", "--tau", "0.5", "--sigma", "1", "--r", "0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(annuli(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"metric": {"name": "euclidean"}, "tau": 0.5, "sigma": 1.0, "r": 0.5}"#).unwrap();
    let path = cfg.to_str().unwrap();
    let base = json(&annuli(&["solve-c", "--config", path]));
    assert!(close(&base["c"], 0.0, 1e-12));
    let over = json(&annuli(&["solve-c", "--config", path, "--r", "0.3"]));
    assert!(over["c"].as_f64().unwrap() < 0.0);
    std::fs::write(&cfg, r#"{"metric": {"name": "euclidean"}, "radius": 2}"#).unwrap();
    assert_eq!(annuli(&["bound", "--config", path]).status.code(), Some(1));
}

#[test]
fn csv_headers() {
    let fat = ["--metric", "euclidean", "--tau", "0.5", "--sigma", "1", "--r", "0.1", "--format", "csv"];
    let out = annuli(&[&["minseq", "--n-list", "10,100"][..], &fat[..]].concat());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,s_n,n_offset,half_n_sq,K_rho_n,err,gap"));
    assert_eq!(lines.count(), 2);

    let out = annuli(&["report", "--metric", "euclidean", "--tau", "0.5", "--sigma", "1", "--sweep", "r=0.1:0.5:0.2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("r,regime,c,K_rho,lower_bound,gap,err"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bound.json");
    let o = annuli(&["bound", "--metric", "spherical", "--tau", "0.5", "--sigma", "0.9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(close(&v["r_star"], 0.2071, 1e-4));
}

#[test]
fn verify_pointwise_passes() {
    let v = json(&annuli(&["verify", "pointwise", "--metric", "hyperbolic_disk", "--tau", "0.5", "--sigma", "0.9", "--r", "0.6", "--seed", "11"]));
    assert_eq!(v["total_violations"], 0);
    assert_eq!(v["verdict"], true);
}

#[test]
fn repeated_runs_are_identical() {
    let args = ["report", "--metric", "cigar", "--tau", "0.5", "--sigma", "0.9", "--r", "0.5"];
    assert_eq!(annuli(&args).stdout, annuli(&args).stdout);
}
