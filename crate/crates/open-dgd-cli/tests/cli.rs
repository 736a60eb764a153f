//! End-to-end tests of the `open-dgd` binary: file contracts, exit codes,
//! and error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_open-dgd"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("read {name}: {e}"))
}

/// Parses a one-header CSV into (header, rows of fields).
fn parse_csv(text: &str) -> (String, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().expect("csv header").to_string();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn simulate_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--instance",
        fixture("two_agent.json").to_str().unwrap(),
        "--iters",
        "200",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (header, rows) = parse_csv(&read(dir.path(), "trace.csv"));
    assert_eq!(header, "k,norm_x,dist_to_min,F_rho,consensus_residual");
    assert_eq!(rows.len(), 201);

    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["agents"], 2);
    assert_eq!(summary["iterations"], 200);
    // eta defaults to 1 / (beta + rho * lambda_n) = 1 / 104.
    let eta = summary["eta"].as_f64().unwrap();
    assert!((eta - 1.0 / 104.0).abs() < 1e-9);
    assert_eq!(summary["inside_ball_violations"], 0);
}

#[test]
fn simulate_with_swap_schedule_reports_zero_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--instance",
        fixture("two_agent.json").to_str().unwrap(),
        "--schedule",
        fixture("swap.json").to_str().unwrap(),
        "--iters",
        "1000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let (header, rows) = parse_csv(&read(dir.path(), "trace.csv"));
    assert_eq!(
        header,
        "k,norm_x,dist_to_min,F_rho,consensus_residual,event_count,inst_min_norm,inside_ball"
    );
    assert_eq!(rows.len(), 1001);
    // The instantaneous sum minimizer flips between the origin and (0, 4.95).
    let inst_min: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert!(inst_min[0].abs() < 1e-9);
    assert!((inst_min[1] - 4.95).abs() < 1e-9);
    assert!((inst_min[2]).abs() < 1e-9);

    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["inside_ball_violations"], 0);
    assert_eq!(summary["total_events"], 1001);
}

#[test]
fn simulate_missing_instance_names_the_path() {
    let out = run(&["simulate", "--instance", "/no/such/instance.json"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/no/such/instance.json"), "stderr: {stderr}");
}

#[test]
fn simulate_honors_rho_and_eta_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--instance",
        fixture("scalar_two_agent.json").to_str().unwrap(),
        "--iters",
        "10",
        "--rho",
        "0.5",
        "--eta",
        "0.25",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["rho"], 0.5);
    assert_eq!(summary["eta"], 0.25);
}

#[test]
fn simulate_warns_on_noncontractive_eta() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--instance",
        fixture("scalar_two_agent.json").to_str().unwrap(),
        "--iters",
        "5",
        "--eta",
        "0.9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning"), "stderr: {stderr}");
}

#[test]
fn verify_batch_passes_and_contains_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "--instances",
        "40",
        "--seed",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (_, rows) = parse_csv(&read(dir.path(), "report.csv"));
    assert!(rows.iter().all(|r| r[4] == "true"));
    let swap = rows
        .iter()
        .find(|r| r[0] == "extremal:sensitivity:swap")
        .expect("swap sensitivity row");
    let observed: f64 = swap[1].parse().unwrap();
    let bound: f64 = swap[2].parse().unwrap();
    assert!((observed - 4.95).abs() < 1e-9);
    assert_eq!(bound, 44.0);

    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "report.json")).unwrap();
    assert!(report["checks"].as_array().unwrap().len() > 40 * 6);
}

#[test]
fn verify_instance_fixture_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "--instance",
        fixture("five_agent_k5.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "report.json")).unwrap();
    assert!(report["fingerprint"].is_string());
}

#[test]
fn verify_corrupted_instance_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "--instance",
        fixture("corrupted_minimizer.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let (_, rows) = parse_csv(&read(dir.path(), "report.csv"));
    let membership = rows
        .iter()
        .find(|r| r[0] == "membership:agent0:minimizer_norm")
        .expect("membership row");
    assert_eq!(membership[4], "false");
    assert_eq!(membership[1], "2");
}

#[test]
fn worstcase_guarantees_the_construction_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "worstcase",
        "--n",
        "2",
        "--kappas",
        "10,100,1000",
        "--restarts",
        "4",
        "--budget",
        "150",
        "--seed",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&read(dir.path(), "scaling.csv"));
    assert_eq!(
        header,
        "kappa,sqrt_kappa,n,best_value,ratio_to_sqrt_kappa,theorem_bound"
    );
    assert_eq!(rows.len(), 3);
    for row in &rows {
        let kappa: f64 = row[0].parse().unwrap();
        let best: f64 = row[3].parse().unwrap();
        let bound: f64 = row[5].parse().unwrap();
        assert!(best >= (kappa - 1.0) / (2.0 * kappa.sqrt()) - 1e-9);
        assert!(best <= bound * (1.0 + 1e-9));
    }
}

#[test]
fn worstcase_empty_grid_is_a_usage_error() {
    let out = run(&["worstcase", "--kappas", ""]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn localize_prints_the_radii() {
    let out = run(&[
        "localize", "--alpha", "1", "--beta", "4", "--rho", "2", "--lambda-n", "3", "--n", "4",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(value["kappa"], 4.0);
    assert_eq!(value["localization_radius"], 3.0);
    assert_eq!(value["kappa_rho"], 10.0);
    let radius = value["stability_radius"].as_f64().unwrap();
    assert!((radius - (6.0 + 12.0 * 5.0_f64.sqrt())).abs() < 1e-9);
}

#[test]
fn localize_from_instance() {
    let out = run(&[
        "localize",
        "--instance",
        fixture("two_agent.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let kappa = value["kappa"].as_f64().unwrap();
    assert!((kappa - 100.0).abs() < 1e-6);
    let radius = value["localization_radius"].as_f64().unwrap();
    assert!((radius - 11.0).abs() < 1e-6);
}

#[test]
fn localize_with_partial_parameters_is_a_usage_error() {
    let out = run(&["localize", "--beta", "4"]);
    assert_eq!(out.status.code(), Some(2));
}
