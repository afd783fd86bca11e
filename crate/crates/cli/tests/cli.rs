use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn strumer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strumer")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["generate", "--out", &p];
    args.extend_from_slice(extra);
    stdout(&strumer(&args));
    p
}

#[test]
fn generate_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a.json", &["--seed", "5", "--mask", "elements:0.8", "--noise", "gmm"]);
    let b = generate(dir.path(), "b.json", &["--seed", "5", "--mask", "elements:0.8", "--noise", "gmm"]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["samples"], 45);
    assert_eq!(doc["mask"]["bits"].as_array().unwrap().len(), 45 * 3);
    // every complex entry is an [re, im] pair
    assert!(doc["y"][0].as_array().unwrap().iter().all(|z| z.as_array().unwrap().len() == 2));
    let back = strumer_core::scenario::Scenario::from_json(&text).unwrap();
    assert_eq!(back.to_json().unwrap(), text.trim_end());
}

#[test]
fn generate_overrides() {
    let out = stdout(&strumer(&[
        "generate", "--samples", "15", "--channels", "2", "--freqs", "-0.3,0.2", "--snr", "5", "--mask", "rows:12",
    ]));
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["channels"], 2);
    assert_eq!(doc["freqs"], serde_json::json!([-0.3, 0.2]));
    let bits = doc["mask"]["bits"].as_array().unwrap();
    assert_eq!(bits.iter().filter(|b| b.as_u64() == Some(1)).count(), 12 * 2);
}

#[test]
fn solve_recovers_a_clean_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate(dir.path(), "s.json", &["--snr", "60", "--freqs", "-0.2,0.1,0.3", "--seed", "1"]);
    let doc: Value = serde_json::from_str(&stdout(&strumer(&["solve", &s, "--reduce", "off"]))).unwrap();
    assert_eq!(doc["order"], 3);
    assert!(doc["rmse"].as_f64().unwrap() < 1e-4, "{doc}");
    let base: Value = serde_json::from_str(&stdout(&strumer(&["solve", &s, "--method", "toeplitz-baseline"]))).unwrap();
    assert_eq!(base["method"], "toeplitz-baseline");
}

#[test]
fn crb_and_mos() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate(dir.path(), "s.json", &["--snr", "20", "--samples", "21", "--freqs", "-0.2,0.1", "--seed", "2"]);
    let c: Value = serde_json::from_str(&stdout(&strumer(&["crb", &s]))).unwrap();
    assert!(c["root_mean_crb"].as_f64().unwrap() > 0.0);
    assert_eq!(c["variances"].as_array().unwrap().len(), 2);
    let (root, var) = (c["root_crb"][0].as_f64().unwrap(), c["variances"][0].as_f64().unwrap());
    assert!((root * root / var - 1.0).abs() < 1e-12);
    let m: Value = serde_json::from_str(&stdout(&strumer(&["mos", &s, "--k-max", "3", "--format", "json"]))).unwrap();
    assert_eq!(m["order"], 2, "{m}");
    assert_eq!(m["scores"].as_array().unwrap().len(), 3);
    let table = stdout(&strumer(&["mos", &s, "--k-max", "3"]));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "order,sigma2,neg2_loglik,penalty,score");
    assert_eq!(lines.len(), 4);
}

#[test]
fn trace_writes_one_line_per_iteration() {
    let out = stdout(&strumer(&["trace", "--preset", "exp1", "--seed", "4", "--max-iters", "40"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "iteration,mu,primal,dual,combined");
    assert!(lines.len() > 1 && lines.len() <= 41);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
}

#[test]
fn experiment_tables_are_stable_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = out.to_str().unwrap();
    let run = |threads: &str| {
        stdout(&strumer(&[
            "experiment", "--preset", "exp2", "--trials", "1", "--seed", "9", "--threads", threads, "--no-timing", "--out", o,
        ]));
        std::fs::read_to_string(&out).unwrap()
    };
    let a = run("1");
    let b = run("2");
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 1 + 6 * 2);
    assert!(dir.path().join("t.csv.spec.json").exists());
    let json = stdout(&strumer(&["experiment", "--preset", "exp1", "--trials", "1", "--format", "json"]));
    let table: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(table["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn validation_errors_exit_with_one() {
    for args in [
        &["experiment", "--preset", "exp99"][..],
        &["experiment", "--preset", "exp1", "--trials", "0"],
        &["generate", "--mask", "sometimes"],
        &["generate", "--freqs", "0.1,0.1"],
        &["solve", "/nonexistent/scenario.json"],
        &["solve", "--p", "3"],
        &["mos", "--k-max", "0"],
        &["bogus"],
    ] {
        let out = strumer(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate(dir.path(), "s.json", &["--seed", "3"]);
    // a component with zero amplitude carries no information about its frequency
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&s).unwrap()).unwrap();
    for entry in doc["amplitudes"][1].as_array_mut().unwrap() {
        *entry = serde_json::json!([0.0, 0.0]);
    }
    std::fs::write(&s, doc.to_string()).unwrap();
    let out = strumer(&["crb", &s]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn presets_are_listed() {
    let out = stdout(&strumer(&["experiment", "--list"]));
    for name in ["exp1", "exp5-rows", "exp7-sla", "exp9"] {
        assert!(out.lines().any(|l| l.starts_with(name)), "{name}");
    }
}
