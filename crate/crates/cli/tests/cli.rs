use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn csdplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csdplan"))
        .args(args)
        .env_remove("CSDPLAN_CALIBRATION")
        .output()
        .unwrap()
}

fn cal() -> String {
    data("calibration.json").to_string_lossy().into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn solve_prints_bep() {
    let out = csdplan(&["solve", &cal(), "--workload", "count", "--host", "host0", "--csd", "newport"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["bep"], 12);
    assert_eq!(v["method"], "closed_form_saturated");
    assert!(v["intermediates"]["numerator"].is_number());
}

#[test]
fn missing_file_is_usage_error() {
    let out = csdplan(&["solve"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = csdplan(&["solve", "--workload", "count", "--host", "host0", "--csd", "newport"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn dangling_reference_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(data("calibration.json"))
        .unwrap()
        .replacen("\"target\": \"smartssd\"", "\"target\": \"foo\"", 1);
    std::fs::write(&bad, text).unwrap();
    let out = csdplan(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"foo\""));
    assert!(out.stdout.is_empty());

    let out = csdplan(&["validate", &cal()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["workloads"].as_array().unwrap().len(), 4);
}

#[test]
fn infeasible_exit_code() {
    let out = csdplan(&[
        "solve", &cal(), "--workload", "page_rank", "--host", "host0", "--csd", "smartssd", "--cores", "4",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["infeasible"], true);
}

#[test]
fn unknown_name_is_reported() {
    let out = csdplan(&["solve", &cal(), "--workload", "count", "--host", "host0", "--csd", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn calibration_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_csdplan"))
        .args(["classify", "--workload", "page_rank", "--host", "host0"])
        .env("CSDPLAN_CALIBRATION", data("calibration.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["class"], "compute_intensive");
}

#[test]
fn csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surface.csv");
    let out = csdplan(&[
        "sweep",
        &data("vector_addition_surface.json").to_string_lossy(),
        "--workload",
        "vector_addition",
        "--host",
        "host0",
        "--csd",
        "newport",
        "--axis-x",
        "r_tx:1:8:1",
        "--axis-y",
        "r_comp:1:8:1",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,bep"));
    assert_eq!(lines.count(), 64);
}

#[test]
fn bad_axis_is_usage_error() {
    let out = csdplan(&[
        "sweep", &cal(), "--workload", "count", "--host", "host0", "--csd", "newport", "--axis-x", "r_tx:1:8",
        "--axis-y", "r_comp:1:8:1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "iso", &cal(), "--workload", "array_merge", "--host", "host0", "--csd", "newport", "--mode", "overload",
        "--axis-x", "sd_tx:1:4:0.5", "--axis-y", "sd_comp:1:8:0.5", "--c", "6",
    ];
    let a = csdplan(&args);
    let b = csdplan(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tco_table() {
    let out = csdplan(&[
        "tco",
        &cal(),
        "--costs",
        &data("costs_epyc.json").to_string_lossy(),
        "--baseline-cpu",
        "EPYC 7351",
        "--ssd-count",
        "12",
        "--candidate",
        "EPYC 7452",
        "--candidate",
        "EPYC 7251:8",
        "--workload",
        "array_merge",
        "--host",
        "host0",
        "--csd",
        "newport",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["rows"][1]["device_count"], 6);
    assert_eq!(v["rows"][2]["total_cost"], 1365.0);
}

#[test]
fn diff_and_curves() {
    let out = csdplan(&[
        "diff", &cal(), "--workload", "array_merge", "--host", "host0", "--csd", "newport", "--sd-comp", "1,2,4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["series"][1]["bep"], 6);

    let out = csdplan(&[
        "curves",
        &cal(),
        "--workload",
        "count",
        "--config",
        "host:host0:1",
        "--config",
        "host:host0:1:12",
        "--config",
        "csd:smartssd",
        "--normalize-to",
        "host:host0:1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["series"][1]["label"], "host0(1) k_limit(12)");
    assert_eq!(v["series"][2]["points"].as_array().unwrap().len(), 16);
}
