//! End-to-end checks of the binary: output shapes, exit codes, determinism,
//! JSON round-tripping, and file output.

use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strata-alloc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const REFERENCE: [&str; 4] = ["--n1-pop", "14526524", "--n2-pop", "16182757"];

#[test]
fn plan_reproduces_reference_allocation() {
    let mut args = vec!["plan"];
    args.extend(REFERENCE);
    args.extend(["--c1", "3", "--c2", "1", "--budget", "1200"]);
    let v = stdout_json(&args);
    assert_eq!(v["n_c"], 618);
    assert_eq!(v["n1"], 242);
    assert_eq!(v["n2"], 474);
    assert_eq!(v["method"], "numerical_minimax");
    assert_eq!(v["closed_form_value"], Value::Null);
    let worst_theta = v["worst_theta"].as_f64().unwrap();
    let worst_variance = v["worst_variance"].as_f64().unwrap();
    assert!((worst_theta - 0.3684).abs() < 1e-3);
    assert!((worst_variance / 2.824477627473095e-4 - 1.0).abs() < 1e-9);
    assert_eq!(v["design"]["n_total"], 30709281);
}

#[test]
fn plan_records_closed_form_diagnostic_below_weight_threshold() {
    let v = stdout_json(&[
        "plan", "--n1-pop", "300000", "--n2-pop", "700000", "--c1", "1", "--c2", "1", "--budget",
        "200",
    ]);
    // w1 = 0.3 sits under the diagnostic threshold, so the raw closed-form
    // value is recorded even though the search stays authoritative.
    assert_eq!(v["method"], "numerical_minimax");
    assert!(v["closed_form_value"].is_f64());
    assert_eq!(v["w1_star"], 0.46);
}

#[test]
fn plan_rejects_infeasible_budget_with_exit_2() {
    let mut args = vec!["plan"];
    args.extend(REFERENCE);
    args.extend(["--c1", "3", "--c2", "1", "--budget", "3"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("budget"), "stderr: {stderr}");
}

#[test]
fn estimate_reports_classical_comparison() {
    let mut args = vec!["estimate"];
    args.extend(REFERENCE);
    args.extend([
        "--n1", "242", "--n2", "474", "--xi1", "60", "--xi2", "40", "--nc", "618", "--xi", "100",
    ]);
    let v = stdout_json(&args);
    assert!((v["theta_hat_w"].as_f64().unwrap() - 0.16175).abs() < 1e-5);
    assert!((v["theta_hat_c"].as_f64().unwrap() - 100.0 / 618.0).abs() < 1e-12);
    assert!((v["v_hat_c"].as_f64().unwrap() - 0.00021946).abs() < 5e-9);
    // A near-break-even design: the reduction is positive but under 1%.
    let reduction = v["reduction_pct"].as_f64().unwrap();
    assert!(reduction > 0.0 && reduction < 1.0, "reduction {reduction}");
}

#[test]
fn estimate_zero_counts_give_zero_estimates() {
    let mut args = vec!["estimate"];
    args.extend(REFERENCE);
    args.extend(["--n1", "242", "--n2", "474", "--xi1", "0", "--xi2", "0"]);
    let v = stdout_json(&args);
    assert_eq!(v["theta_hat_w"].as_f64().unwrap(), 0.0);
    assert_eq!(v["v_hat_w"].as_f64().unwrap(), 0.0);
    assert_eq!(v["theta_hat_c"], Value::Null);
    assert_eq!(v["reduction_pct"], Value::Null);
}

#[test]
fn estimate_rejects_excess_counts_with_exit_2() {
    let mut args = vec!["estimate"];
    args.extend(REFERENCE);
    args.extend(["--n1", "242", "--n2", "474", "--xi1", "243", "--xi2", "0"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_rejects_half_specified_classical_arm() {
    let mut args = vec!["estimate"];
    args.extend(REFERENCE);
    args.extend(["--n1", "242", "--n2", "474", "--xi1", "10", "--xi2", "12", "--nc", "618"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tables_csv_is_deterministic_and_complete() {
    let first = run(&["tables"]);
    let second = run(&["tables"]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // 8 + 16 + 16 + 8 + 16 + 16 rows plus the header.
    assert_eq!(lines.len(), 81);
    assert_eq!(lines[0], "table,xi1,xi2,support_pct,variance,reduction_pct");
    assert!(lines[1].starts_with("1,10,128,16.1400,"));
}

#[test]
fn tables_subset_keeps_requested_numbers_only() {
    let out = run(&["tables", "--tables", "2,4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut seen: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    seen.dedup();
    assert_eq!(seen, ["2", "4"]);
}

#[test]
fn tables_rejects_unknown_number_with_exit_2() {
    let out = run(&["tables", "--tables", "7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tables_compare_mode_annotates_printed_values() {
    let out = run(&["tables", "--compare-paper"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains("printed_xi2"));
    assert!(header.contains("dev_variance_rel"));
    assert!(text.contains("garbled"));
    assert!(text.contains("printed body inconsistent with caption"));

    let v = stdout_json(&["tables", "--compare-paper", "--format", "json"]);
    let tables = v["tables"].as_array().unwrap();
    assert_eq!(tables.len(), 6);
    assert_eq!(tables[4]["table"], 5);
    assert_eq!(tables[4]["note"], "printed body inconsistent with caption");
    assert_eq!(tables[0]["rows"][0]["printed_xi2"], 128);
    assert_eq!(tables[0]["rows"][0]["dev_xi2"], 0);
    // The garbled row annotates nothing but stays regenerated.
    assert_eq!(tables[0]["rows"][7]["garbled"], true);
    assert_eq!(tables[0]["rows"][7]["printed_xi2"], Value::Null);
    assert_eq!(tables[0]["rows"][7]["xi2"], 4);
}

#[test]
fn json_output_round_trips_idempotently() {
    let mut plan_args = vec!["plan"];
    plan_args.extend(REFERENCE);
    plan_args.extend(["--c1", "3", "--c2", "1", "--budget", "1200"]);
    let tables_args = ["tables", "--format", "json"];
    for args in [&plan_args[..], &tables_args[..]] {
        let out = run(args);
        let text = String::from_utf8(out.stdout).unwrap();
        let parsed: Value = serde_json::from_str(&text).unwrap();
        let re_serialized = serde_json::to_string(&parsed).unwrap();
        let re_parsed: Value = serde_json::from_str(&re_serialized).unwrap();
        assert_eq!(parsed, re_parsed, "args: {args:?}");
    }
}

#[test]
fn simulate_is_bit_identical_across_runs() {
    let args = [
        "simulate", "--n1-pop", "400", "--n2-pop", "600", "--n1", "14", "--n2", "32", "--theta1",
        "0.3", "--theta2", "0.6", "--replicates", "2000", "--seed", "7", "--nc", "46",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let v: Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 7);
    assert!(v["result"]["mean_c"].is_f64());
    assert!(v["verdict"].is_string());
}

#[test]
fn simulate_degenerate_truth_passes_exactly() {
    let args = [
        "simulate", "--n1-pop", "400", "--n2-pop", "600", "--n1", "14", "--n2", "32", "--theta1",
        "0", "--theta2", "0", "--replicates", "500", "--seed", "1",
    ];
    let v: Value = serde_json::from_slice(&run(&args).stdout).unwrap();
    assert_eq!(v["result"]["var_w"].as_f64().unwrap(), 0.0);
    assert_eq!(v["result"]["mean_w"].as_f64().unwrap(), 0.0);
    assert_eq!(v["verdict"], "pass");
}

#[test]
fn simulate_rejects_invalid_config_with_exit_2() {
    let args = [
        "simulate", "--n1-pop", "400", "--n2-pop", "600", "--n1", "401", "--n2", "32", "--theta1",
        "0.3", "--theta2", "0.6", "--replicates", "500", "--seed", "1",
    ];
    assert_eq!(run(&args).status.code(), Some(2));
}

#[test]
fn out_flag_writes_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tables.csv");
    let out = run(&["tables", "--tables", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(String::from_utf8_lossy(&out.stderr).contains("wrote"));
}
