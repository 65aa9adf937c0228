use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlsnf")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    let doc: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    doc["report"].clone()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn quartic_scan_has_no_quasi_resonant_tuples() {
    let out = run(&["verify-divisors", "--q", "2", "--N", "30", "--bound", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["setSize"], 0);
    assert!(r["witness"].is_null());
}

#[test]
fn wick_check_passes_at_p2() {
    let out = run(&["wick-check", "--p", "2", "--K", "8", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["maxResidual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r["pass"], true);
}

#[test]
fn missing_flag_prints_usage() {
    let out = run(&["verify-divisors", "--N", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--q"), "{err}");
    assert!(err.contains("Usage: nlsnf verify-divisors"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_values_are_config_errors() {
    let out = run(&["normal-form", "--K", "2", "--policy", "sometimes"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["sparsity-check", "--arithmetic", "3", "--doubly-exponential", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["sparsity-check", "--arithmetic", "6"]);
    assert!(out.status.success());
    assert_eq!(report(&out)["trend"]["values"].as_array().unwrap().len(), 6);
}

#[test]
fn config_file_section_and_flag_override() {
    let cfg = scratch("divisors.toml");
    std::fs::write(&cfg, "q = 9\n\n[verify-divisors]\nq = 3\nN = 12\nbound = 0\n").unwrap();
    let out = run(&["verify-divisors", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["parameters"]["q"], 3);
    assert_eq!(r["parameters"]["n"], 12);
    assert!(r["setSize"].as_u64().unwrap() > 0);
    assert!(r["constantExact"].is_string());

    let out = run(&["verify-divisors", "--config", cfg.to_str().unwrap(), "--N", "5"]);
    assert_eq!(report(&out)["parameters"]["n"], 5);

    let bad = scratch("bad.toml");
    std::fs::write(&bad, "[verify-divisors]\nq = 2\nN = 4\nwidth = 1\n").unwrap();
    let out = run(&["verify-divisors", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_check_exits_three_after_writing_the_report() {
    let path = scratch("wick-fail.json");
    let out = run(&["wick-check", "--p", "3", "--K", "3", "--samples", "5", "--tolerance", "0", "--norm", "3", "--out", path.to_str().unwrap()]);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let max = doc["report"]["maxResidual"].as_f64().unwrap();
    if max > 0.0 {
        assert_eq!(out.status.code(), Some(3));
        assert_eq!(doc["report"]["pass"], false);
    } else {
        assert!(out.status.success());
    }
}

#[test]
fn output_is_reproducible() {
    let args = ["kam-sample", "--samples", "500", "--seed", "7", "--K", "4"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r["result"]["samples"], 500);
}

#[test]
fn normal_form_round_trips_through_files() {
    let h = scratch("h.json");
    let out = run(&["build-hamiltonian", "--K", "3", "--out", h.to_str().unwrap()]);
    assert!(out.status.success());
    let from_file = run(&["normal-form", "--input", h.to_str().unwrap(), "--order", "4"]);
    let direct = run(&["normal-form", "--K", "3", "--order", "4"]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert_eq!(report(&from_file)["normalForm"], report(&direct)["normalForm"]);
    let r = report(&direct);
    assert!(r["normalForm"]["terms"].as_array().unwrap().len() > 0);
}

#[test]
fn simulate_writes_a_trajectory() {
    let csv = scratch("traj.csv");
    let out = run(&["simulate", "--K", "3", "--dt", "0.01", "--T", "0.5", "--amplitude", "0.3", "--record-every", "10", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["drift"]["mass"].as_f64().unwrap() < 1e-12);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
}
