//! End-to-end tests of the `khessian` binary: exit codes, artifact layout,
//! and config/flag plumbing.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_khessian"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("khessian-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_passes_and_writes_artifacts() {
    let dir = tmp_dir("validate");
    let out = bin()
        .args(["validate", "--output"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("[PASS]"));
    assert!(!stdout(&out).contains("[FAIL]"));
    for artifact in ["report.json", "solution.field", "solution.mask"] {
        assert!(dir.join(artifact).exists(), "missing {artifact}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["all_pass"], serde_json::Value::Bool(true));
}

#[test]
fn solve_from_config_file() {
    let dir = tmp_dir("solve");
    let cfg = dir.join("run.conf");
    fs::write(
        &cfg,
        "problem.k = 2\n\
         problem.f = \"45*(x1^2+x2^2+x3^2)\"\n\
         problem.phi = \"0\"\n\
         problem.theta = 1e-4\n\
         problem.domain = \"ball(0,0,0; 1)\"\n\
         grid.m = 17\n\
         grid.lo = [-1.4, -1.4, -1.4]\n\
         grid.hi = [1.4, 1.4, 1.4]\n",
    )
    .unwrap();
    let out = bin()
        .args(["solve", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}{}",
        stdout(&out),
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert!(report["report"]["final_residual"].as_f64().unwrap() < 1e-6);
    assert!(dir.join("series.csv").exists());

    // --theta overrides the config value and is echoed without --quiet.
    let out2 = bin()
        .args(["solve", "--theta", "1e-2", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(0));
    assert!(stdout(&out2).contains("override: problem.theta = 0.01"));
}

#[test]
fn check_f_reports_constants() {
    let dir = tmp_dir("checkf");
    let out = bin()
        .args([
            "check-f",
            "--f",
            "45*(x1^2+x2^2+x3^2)",
            "--k",
            "2",
            "--grid-m",
            "17",
            "--quiet",
            "--output",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let c0 = report["audit"]["c0_gradient"].as_f64().unwrap();
    assert!((c0 - 6.0 * 5f64.sqrt()).abs() < 1e-2, "c0_gradient = {c0}");
}

#[test]
fn check_domain_flags_nonconvex_boundary() {
    let dir = tmp_dir("checkdom");
    let out = bin()
        .args([
            "check-domain",
            "--domain",
            "ball(0,0,0; 1)",
            "--k",
            "2",
            "--quiet",
            "--output",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["convexity"]["pass"], serde_json::Value::Bool(true));
}

#[test]
fn input_errors_exit_2() {
    let dir = tmp_dir("badinput");
    // Unparseable expression.
    let out = bin()
        .args(["check-f", "--f", "45*(", "--k", "2", "--quiet", "--output"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Missing required config key.
    let out2 = bin()
        .args(["solve", "--quiet", "--output"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(2));
    // Unknown lab experiment.
    let out3 = bin()
        .args(["lab", "--name", "nonsense", "--quiet", "--output"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out3.status.code(), Some(2));
}

#[test]
fn lab_concavity_runs() {
    let dir = tmp_dir("lab");
    let out = bin()
        .args([
            "lab",
            "--name",
            "concavity",
            "--n",
            "3",
            "--k",
            "2",
            "--samples",
            "2000",
            "--seed",
            "5",
            "--quiet",
            "--output",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["violations"].as_u64(), Some(0));
}
