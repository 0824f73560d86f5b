use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn qentropy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qentropy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

const DICE: &str = r#"{"partition": {"weights": [1, 1, 1, 1, 1, 1]},
    "constraints": [{"values": [1, 2, 3, 4, 5, 6], "target": 4.5}], "kind": "ordinary"}"#;

const TWO_POINT_ESCORT: &str = r#"{"partition": {"weights": [1, 1]},
    "constraints": [{"values": [0, 1], "target": 0.3}], "kind": "escort", "q": 2}"#;

#[test]
fn tsallis_entropy_of_fair_coin() {
    let out = qentropy(&[
        "entropy",
        "--kind",
        "tsallis",
        "--q",
        "2",
        "--input",
        r#"{"pmf": [0.5, 0.5]}"#,
    ]);
    assert_eq!(json(&out)["value"], 0.5);
}

#[test]
fn entropy_with_explicit_partition() {
    let input = r#"{"pmf": [0.25, 0.75], "partition": {"cells": [{"label": "lo", "left": 0, "right": 0.5},
        {"label": "hi", "left": 0.5, "right": 1}], "weights": [0.5, 0.5]}}"#;
    let out = qentropy(&["entropy", "--kind", "measure", "--input", input]);
    let v = json(&out)["value"].as_f64().unwrap();
    let expected = -(0.25f64 * 0.5f64.ln() + 0.75 * 1.5f64.ln());
    assert!((v - expected).abs() < 1e-15);
}

#[test]
fn kl_divergence_value() {
    let out = qentropy(&["divergence", "--input", r#"{"p": [0.8, 0.2], "r": [0.5, 0.5]}"#]);
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - 0.192_744_757_021_757_43).abs() < 1e-15);
}

#[test]
fn approx_convergence_csv() {
    let input = r#"{"interval": [0, 1], "p": {"expr": "2 * x"}, "r": {"expr": "1"}}"#;
    let out = qentropy(&["approx", "--alpha", "2", "--levels", "2..12", "--input", input]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "level,discrete_divergence,reference_divergence,abs_error");
    assert_eq!(lines.len(), 12);
    let last: Vec<&str> = lines[11].split(',').collect();
    assert_eq!(last[0], "12");
    assert!(last[3].parse::<f64>().unwrap() < 1e-3);
}

#[test]
fn approx_from_values_as_json() {
    let input = r#"{"interval": [0, 1], "p": {"values": [1, 1, 3, 3]}, "r": {"values": [1, 1, 1, 1]}}"#;
    let out = qentropy(&[
        "approx", "--q", "2", "--levels", "1..2", "--format", "json", "--input", input,
    ]);
    let v = json(&out);
    assert_eq!(v["kind"], "tsallis");
    assert_eq!(v["base_resolution"], 2);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    // Level 2 resolves the step density exactly.
    assert!(rows[1]["abs_error"].as_f64().unwrap() < 1e-15);
}

#[test]
fn maxent_dice() {
    let v = json(&qentropy(&["maxent", "--kind", "shannon", "--input", DICE]));
    let beta = v["beta"][0].as_f64().unwrap();
    assert!((beta + 0.37105).abs() < 1e-5);
    for key in ["log_Z", "pmf", "entropy", "residuals", "iterations"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["residuals"]["moments"].as_f64().unwrap() < 1e-10);
}

#[test]
fn maxent_escort_embeds_residuals() {
    let v = json(&qentropy(&["maxent", "--input", TWO_POINT_ESCORT]));
    for key in ["zbar", "q_mass", "beta_q", "identity_residuals", "thermo"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let residuals = v["identity_residuals"].as_object().unwrap();
    assert!(residuals.len() >= 5);
    for (name, r) in residuals {
        assert!(r.as_f64().unwrap() < 1e-8, "{name}");
    }
}

#[test]
fn output_is_deterministic() {
    let a = qentropy(&["maxent", "--input", TWO_POINT_ESCORT]);
    let b = qentropy(&["maxent", "--input", TWO_POINT_ESCORT]);
    assert_eq!(a.stdout, b.stdout);
    let a = qentropy(&["verify", "--samples", "200", "--seed", "5"]);
    let b = qentropy(&["verify", "--samples", "200", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn input_and_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("dice.json");
    let output = dir.path().join("solution.json");
    fs::write(&input, DICE).unwrap();
    let out = qentropy(&[
        "maxent",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&output).unwrap()).unwrap();
    assert!(v["beta"].is_array());
}

#[test]
fn io_errors_exit_3() {
    let out = qentropy(&["entropy", "--input", "/definitely/missing.json"]);
    assert_eq!(out.status.code(), Some(3));
    let out = qentropy(&[
        "entropy",
        "--input",
        r#"{"pmf": [1]}"#,
        "--output",
        "/definitely/missing/dir/out.json",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validation_errors_exit_1() {
    let out = qentropy(&[
        "maxent",
        "--input",
        r#"{"partition": {"weights": [1, 1]},
        "constraints": [{"values": [0, 1], "target": 1.5}]}"#,
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["field"], "constraints");

    let out = qentropy(&[
        "entropy",
        "--q",
        "-1",
        "--kind",
        "tsallis",
        "--input",
        r#"{"pmf": [1]}"#,
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = qentropy(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_2_with_residuals() {
    let problem = r#"{"partition": {"weights": [1, 1, 1, 1, 1, 1]},
        "constraints": [{"values": [1, 2, 3, 4, 5, 6], "target": 5.9}]}"#;
    let out = qentropy(&["maxent", "--tol", "1e-300", "--input", problem]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"], "non_convergence");
    assert!(v["residuals"].is_array());
}

#[test]
fn verify_table_csv() {
    let out = qentropy(&["verify", "--samples", "100", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,samples,failures,worst,tolerance,passed"));
    assert_eq!(lines.count(), qentropy::verify::suite_names().count());
}

#[test]
fn demo_table() {
    let out = qentropy(&[
        "demo",
        "--format",
        "csv",
        "--input",
        r#"{"intervals": [[0, 0.5]], "n": [2, 4]}"#,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("0,0.5,2,0.6931471805599453,-0.6931471805599453"));

    let v = json(&qentropy(&["demo", "--kind", "generalized", "--q", "2"]));
    assert_eq!(v["index"], 2.0);
}

#[test]
fn help_exits_0() {
    assert_eq!(qentropy(&["--help"]).status.code(), Some(0));
}
