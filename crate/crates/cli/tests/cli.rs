use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn geninv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geninv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("geninv-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, contents).unwrap();
    p
}

#[test]
fn relu_pinv_at_negative_point_is_zero() {
    let out = geninv(&["pinv1d", "--kind", "relu", "--w", "-3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["value"], 0.0);
    assert_eq!(v["command"], "pinv1d");
}

#[test]
fn hard_threshold_example() {
    let v = json_of(&geninv(&["pinv1d", "--kind", "hard", "--a", "2", "--w", "1.5"]));
    assert_eq!(v["value"], 2.0);
}

#[test]
fn square_reports_both_signs_and_tanh_reports_undefined() {
    let v = json_of(&geninv(&["pinv1d", "--kind", "square", "--w", "4"]));
    assert_eq!(v["values"], serde_json::json!([-2.0, 2.0]));
    assert_eq!(v["unique"], false);
    let v = json_of(&geninv(&["pinv1d", "--kind", "tanh", "--w", "2"]));
    assert!(v["value"].is_null());
    assert_eq!(v["defined"], false);
}

#[test]
fn missing_parameter_is_an_input_error() {
    let out = geninv(&["pinv1d", "--kind", "soft", "--w", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--a"));
}

#[test]
fn drazin_of_idempotent_is_itself() {
    let p = scratch("idem.json", r#"{"domain":4,"codomain":4,"table":[0,0,2,2]}"#);
    let out = geninv(&["drazin", "--op", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["exists"], true);
    assert_eq!(v["inverse_table"], serde_json::json!([0, 0, 2, 2]));
    assert_eq!(v["index"], 1);
}

#[test]
fn malformed_json_names_the_file_and_line() {
    let p = scratch("broken.json", "{\"domain\": 2,\n \"table\": [0, }");
    let out = geninv(&["drazin", "--op", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("broken.json"), "{err}");
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn malformed_csv_names_the_line() {
    let p = scratch("bad.csv", "1\n2\nx\n4\n5\n6\n7\n8\n");
    let out = geninv(&["denoise", "--n", "8", "--kind", "hard", "--a", "0.5", "--signal", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn denoise_hard_round_trip_and_output_file() {
    let sig = scratch("sig.csv", "0.1\n-2\n3\n0.05\n1\n-1\n0.3\n4\n");
    let out_path = sig.with_file_name("den.csv");
    let out = geninv(&[
        "denoise", "--basis", "haar", "--n", "8", "--kind", "hard", "--a", "0.5", "--signal",
        sig.to_str().unwrap(), "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["difference"].as_f64().unwrap() <= 1e-10);
    let written: Vec<f64> = fs::read_to_string(&out_path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let reported: Vec<f64> = serde_json::from_value(v["denoised"].clone()).unwrap();
    assert_eq!(written, reported);
}

#[test]
fn vanish_reports_polynomials() {
    let p = scratch("shift.json", r#"{"prime":2,"dim":2,"table":[0,2,0,2]}"#);
    let out = geninv(&["vanish", "--op", p.to_str().unwrap(), "--prime", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["degree_bound"].as_u64().is_some());
    assert!(v["minimal"].as_array().is_some());
    let wrong = geninv(&["vanish", "--op", p.to_str().unwrap(), "--prime", "3"]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn layer_and_oracle_commands() {
    let a = scratch("A.json", r#"{"rows":1,"cols":2,"data":[1,1]}"#);
    let v = json_of(&geninv(&["layer-pinv", "--weights", a.to_str().unwrap(), "--act", "relu", "--w", "-5"]));
    assert_eq!(v["value"], serde_json::json!([0.0, 0.0]));
    let op = scratch("relu.json", r#"{"kind":"scalar","op":{"kind":"relu"}}"#);
    let v = json_of(&geninv(&[
        "oracle", "--op", op.to_str().unwrap(), "--w", "-3", "--box", "-10", "10", "--step", "0.01",
    ]));
    assert_eq!(v["value"], serde_json::json!([0.0]));
}

#[test]
fn verify_suite_passes_and_is_byte_identical() {
    let a = geninv(&["verify-suite", "--seed", "42"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    let v = json_of(&a);
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    let b = geninv(&["verify-suite", "--seed", "42"]);
    assert_eq!(a.stdout, b.stdout);
}
