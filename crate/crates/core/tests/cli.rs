//! The `opfbench` binary: subcommands, outputs and exit codes.

mod common;

use std::process::{Command, Output};

use common::case_path;

fn opfbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opfbench")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_and_preprocess() {
    let case = case_path("case5_pjm");
    let o = opfbench(&["validate", case.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("5 buses, 6 branches, 5 generators"));

    let o = opfbench(&["preprocess", case.to_str().unwrap(), "--slope-tol", "1e-6"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("gen ")).count(), 5);
}

#[test]
fn solve_reports_status_and_writes_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("iters.csv");
    let case = case_path("case2_pwl");
    let o = opfbench(&["solve", case.to_str().unwrap(), "--pf", "dc", "--cost", "delta", "--log-iters", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("status      optimal"));
    let obj: f64 = out.lines().find_map(|l| l.strip_prefix("objective")).unwrap().trim().parse().unwrap();
    assert!((obj - 3000.0).abs() < 1e-4);
    let csv = std::fs::read_to_string(&log).unwrap();
    assert!(csv.starts_with("iter,mu,"));

    let o = opfbench(&["solve", case.to_str().unwrap(), "--pf", "ac", "--cost", "psi", "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(opfbench(&["solve", "/nonexistent.m", "--pf", "dc", "--cost", "psi"]).status.code(), Some(2));
    let case = case_path("case_poly2");
    assert_eq!(opfbench(&["solve", case.to_str().unwrap(), "--pf", "dc", "--cost", "psi"]).status.code(), Some(2));
    assert_eq!(opfbench(&["solve", case.to_str().unwrap(), "--pf", "xx", "--cost", "psi"]).status.code(), Some(2));
    assert_eq!(opfbench(&["bench", "--cases", "/nonexistent/*.m"]).status.code(), Some(2));
}

#[test]
fn bench_writes_csv_and_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = common::data_dir().join("case[12]_pwl.m");
    let csv = dir.path().join("grid.csv");
    let o = opfbench(&[
        "bench", "--cases", pattern.to_str().unwrap(), "--pf", "dc,soc", "--cost", "psi,lambda,delta,phi",
        "--trials", "1", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().starts_with("case1_pwl,soc,"));

    let o = opfbench(&["bench", "--cases", pattern.to_str().unwrap(), "--pf", "dc", "--trials", "1", "--format", "md"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("| Test Case |"));
}
