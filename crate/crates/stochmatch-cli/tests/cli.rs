//! End-to-end CLI checks through the compiled binary.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stochmatch"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("stochmatch_cli_tests").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn gen_writes_a_parsable_graph() {
    let dir = workdir("gen");
    let out = dir.join("g.txt");
    let status = bin()
        .args(["gen", "--instance", "tightness", "--L", "4", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let g = stochmatch::graph::Graph::read_from_path(&out).unwrap();
    assert_eq!(g.vertex_count(), 16);
    assert_eq!(g.edge_count(), 24);
}

#[test]
fn gen_rejects_missing_params_with_usage_exit() {
    let dir = workdir("gen_bad");
    let out = dir.join("g.txt");
    let status = bin()
        .args(["gen", "--instance", "random", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn stats_reports_single_edge_probability() {
    let dir = workdir("stats");
    let graph_path = dir.join("g.txt");
    let g = stochmatch::graph::Graph::build(&[(0, 1, 2.0)], 0.25).unwrap();
    g.write_to_path(&graph_path).unwrap();
    let out = bin()
        .args(["stats", "-g"])
        .arg(&graph_path)
        .args(["--trials", "20000", "--seed", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let q = json["q"][0].as_f64().unwrap();
    assert!((q - 0.25).abs() < 0.02, "q = {q}");
}

#[test]
fn run_produces_report_and_csv() {
    let dir = workdir("run");
    let config = serde_json::json!({
        "instance": {"kind": "random", "n": 8, "density": 0.5,
                      "weights": {"mode": "unit"}, "p": 0.5, "seed": 3},
        "algorithm": "nonadaptive",
        "epsilon": 0.25,
        "r_override": 20,
        "stats_trials": 2000,
        "eval_trials": 2000,
        "runs": 2,
        "seed": 9
    });
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let report_path = dir.join("report.json");
    let csv_path = dir.join("summary.csv");
    let _ = std::fs::remove_file(&csv_path);
    let status = bin()
        .args(["run", "-c"])
        .arg(&config_path)
        .arg("-o")
        .arg(&report_path)
        .arg("--csv")
        .arg(&csv_path)
        .status()
        .unwrap();
    assert!(status.success());
    let report = stochmatch::harness::read_report(&report_path).unwrap();
    assert!(report.algorithm.ratio > 0.0);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with(stochmatch::harness::CSV_HEADER));
}

#[test]
fn verify_mathratio_suite_passes() {
    let out = bin()
        .args(["verify", "--suite", "mathratio", "--seed", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[PASS] mathratio"));
}

#[test]
fn verify_rejects_unknown_suite() {
    let status = bin()
        .args(["verify", "--suite", "nope", "--seed", "1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
