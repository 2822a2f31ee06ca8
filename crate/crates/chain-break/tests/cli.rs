//! End-to-end checks of the command-line interface and its exit-code
//! contract: 0 on pass, 1 on threshold failure, 2 on configuration error.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chain-break"))
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

const SMALL_CONFIG: &str = r#"
d = 2
eps = 0.05
sigma = 0.1
b_break = 2.0
potential = "quadratic:u=1"
system = "linear-constant"
n_paths = 32
master_seed = 7
"#;

#[test]
fn simulate_prints_summary_and_writes_files() {
    let config_path = tmp("cli_simulate.toml");
    std::fs::write(&config_path, SMALL_CONFIG).unwrap();
    let csv_path = tmp("cli_rows.csv");
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .arg("--csv")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("stdout is the JSON summary");
    assert_eq!(summary["n_paths"], 32);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("path_index,tau,link,censored,normalized_tau"));
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn missing_config_exits_with_2() {
    let output = bin()
        .args(["simulate", "--config", "/nonexistent/experiment.toml"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn invalid_config_exits_with_2() {
    let config_path = tmp("cli_bad.toml");
    std::fs::write(&config_path, SMALL_CONFIG.replace("n_paths = 32", "n_paths = 0")).unwrap();
    let output = bin().args(["simulate", "--config"]).arg(&config_path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error"));
}

#[test]
fn check_regime_reports_quantities() {
    let output = bin()
        .args(["check-regime", "--eps", "1e-4", "--sigma", "1e-2"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["ratio"], 100.0);
    assert!((report["vanish3"].as_f64().unwrap() - 0.07813165794406947).abs() < 1e-12);
    assert_eq!(report["intermediate"], true);
    // eps >= 1 is a domain error.
    let output = bin()
        .args(["check-regime", "--eps", "1.5", "--sigma", "0.1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn verify_law_fails_threshold_with_tiny_undersampled_run() {
    // 5 paths cannot match the law; the command must exit 1, not crash.
    let output = bin()
        .args(["verify-law", "--paths", "5", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("FAIL"), "stdout: {text}");
}

#[test]
fn oracle_emits_csv_table() {
    let out_path = tmp("oracle.csv");
    let output = bin()
        .args([
            "oracle",
            "--kind",
            "ou-variance",
            "--u",
            "1.0",
            "--sigma",
            "1.0",
            "--t-end",
            "2.0",
            "--points",
            "3",
        ])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let table = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "t,value");
    assert_eq!(lines.len(), 4);
    // Row at t = 1: (1 - e^{-2}) / 2.
    let row: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(row[0], "1");
    let value: f64 = row[1].parse().unwrap();
    assert!((value - 0.43233235838169365).abs() < 1e-12);
}

#[test]
fn sweep_runs_each_value() {
    let config_path = tmp("cli_sweep.toml");
    std::fs::write(&config_path, SMALL_CONFIG).unwrap();
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&config_path)
        .args(["--axis", "sigma", "--values", "0.08,0.12"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("sigma = 0.08"));
    assert!(text.contains("sigma = 0.12"));
}
