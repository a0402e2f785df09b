//! Black-box tests of the `waning` binary.

use std::path::Path;
use std::process::{Command, Output};

fn waning(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waning"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn test_subcommand_reproduces_fixture() {
    let out = waning(&[
        "test",
        "--summary",
        &fixture("hpylori.json"),
        "--method",
        "direct-delta",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let result: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((result["estimate"].as_f64().unwrap() - 0.977).abs() < 0.005);
    assert!((result["p_value"].as_f64().unwrap() - 0.97).abs() < 0.01);
    assert_eq!(result["method"], "direct_delta");
}

#[test]
fn test_result_json_round_trips() {
    let out = waning(&["test", "--summary", &fixture("hpylori.json"), "--pretty"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let reserialized = serde_json::to_value(&value).unwrap();
    assert_eq!(value, reserialized);
}

#[test]
fn missing_input_is_usage_error() {
    let out = waning(&["test"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn conflicting_inputs_are_usage_errors() {
    let out = waning(&[
        "test",
        "--summary",
        &fixture("hpylori.json"),
        "--records",
        "whatever.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_data_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"mode":"count","arm0":{"n":5,"p1":{"events":4},"p2":{"events":4}},"arm1":{"n":5,"p1":{"events":1},"p2":{"events":1}}}"#,
    )
    .unwrap();
    let out = waning(&["test", "--summary", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid counts"));
}

#[test]
fn simulate_then_bootstrap_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("null.json");
    std::fs::write(
        &config,
        r#"{"n":1500,"dist":{"p_doomed":0.2,"p_helped":0.6,"p_harmed":0.2,"p_immune":0.0},
           "p_e1":0.5,"p_e2":0.5,"w":1.0,"scenario":"helped_to_doomed","seed":11}"#,
    )
    .unwrap();
    let records = dir.path().join("records.csv");
    let sim = waning(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        records.to_str().unwrap(),
    ]);
    assert!(
        sim.status.success(),
        "{}",
        String::from_utf8_lossy(&sim.stderr)
    );
    let csv = std::fs::read_to_string(&records).unwrap();
    assert!(csv.starts_with("arm,outcome\n"));
    assert_eq!(csv.lines().count(), 1501);

    let args = [
        "test",
        "--records",
        records.to_str().unwrap(),
        "--bootstrap",
        "--b",
        "300",
        "--seed",
        "7",
    ];
    let first = waning(&args);
    let second = waning(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let result: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    assert_eq!(result["method"], "bootstrap");
    assert!(result.get("log_se").is_none());
}

#[test]
fn hr_test_runs_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{"n":2000,"dist":{"p_doomed":0.2,"p_helped":0.6,"p_harmed":0.2,"p_immune":0.0},
           "p_e1":0.7,"p_e2":0.7,"w":1.0,"scenario":"helped_to_doomed","seed":3}"#,
    )
    .unwrap();
    let records = dir.path().join("records.csv");
    waning(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        records.to_str().unwrap(),
    ]);
    let out = waning(&[
        "hr-test",
        "--records",
        records.to_str().unwrap(),
        "--b",
        "200",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("biased"));
    let result: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(result["method"], "hr_bootstrap");
}

#[test]
fn bound_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    std::fs::write(
        &summary,
        r#"{"mode":"count","arm0":{"n":10000,"p1":{"events":200},"p2":{"events":100}},
           "arm1":{"n":10000,"p1":{"events":150},"p2":{"events":30}}}"#,
    )
    .unwrap();
    let csv_path = dir.path().join("curve.csv");
    let svg_path = dir.path().join("curve.svg");
    let out = waning(&[
        "bound",
        "--summary",
        summary.to_str().unwrap(),
        "--p12-grid",
        "0,0.5,1",
        "--out",
        csv_path.to_str().unwrap(),
        "--svg",
        svg_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("p12,upper_bound,ci_upper\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(2).unwrap().starts_with("0.5,0.85"));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn power_grid_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(
        &grid,
        r#"{"n_values":[400],"exposure_values":[0.5],"w_values":[1.0],
           "methods":["direct_delta"],"scenario":"helped_to_doomed",
           "replications":5,"base_seed":1}"#,
    )
    .unwrap();
    let dist = dir.path().join("dist.json");
    std::fs::write(
        &dist,
        r#"{"p_doomed":0.2,"p_helped":0.6,"p_harmed":0.2,"p_immune":0.0}"#,
    )
    .unwrap();
    let table = dir.path().join("table.csv");
    let plot = dir.path().join("plot.svg");
    let out = waning(&[
        "power",
        "--grid",
        grid.to_str().unwrap(),
        "--dist",
        dist.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
        "--svg",
        plot.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&table).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "n,exposure,w,method,rejection_rate,reps,degenerate"
    );
    assert_eq!(csv.lines().count(), 2);
    assert!(std::fs::read_to_string(&plot)
        .unwrap()
        .contains("rejection rate"));

    let hr = waning(&[
        "hr-power",
        "--grid",
        grid.to_str().unwrap(),
        "--dist",
        dist.to_str().unwrap(),
    ]);
    assert!(
        hr.status.success(),
        "{}",
        String::from_utf8_lossy(&hr.stderr)
    );
    assert!(stdout(&hr).contains("hr_bootstrap"));
}

#[test]
fn stratified_report_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("strata.json");
    std::fs::write(
        &input,
        r#"{"strata":{
            "young":{"mode":"count","arm0":{"n":1000,"p1":{"events":40},"p2":{"events":30}},
                     "arm1":{"n":1000,"p1":{"events":20},"p2":{"events":15}}},
            "old":{"mode":"count","arm0":{"n":500,"p1":{"events":25},"p2":{"events":10}},
                   "arm1":{"n":500,"p1":{"events":12},"p2":{"events":5}}}
        }}"#,
    )
    .unwrap();
    let out = waning(&["stratified", "--input", input.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = stdout(&out);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("young,"));
    assert!(lines[2].starts_with("old,"));
    assert!(lines[3].starts_with("pooled,"));
}
