//! Binary-level checks: exit codes, persisted artifacts, and the
//! witness re-verification round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_snpick")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary spawns")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).expect("temp file writes");
    path
}

/// Antipodal two-point pair data, solvable for |zeta| < 1/2.
fn gamma_problem_json(zeta: f64) -> String {
    format!(
        r#"{{"nodes": [[0.0, 0.0], [0.5, 0.0]],
            "values": [[{zeta}, 0.0, 0.0, 0.0], [{mz}, 0.0, 0.0, 0.0]]}}"#,
        mz = -zeta
    )
}

#[test]
fn solve_writes_certificates_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let zeta = 3.0f64.sqrt() - 2.0;
    let problem = write_file(dir.path(), "pair.json", &gamma_problem_json(zeta));

    let out = run(&["solve", problem.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {stdout}");
    assert!(stdout.contains("SOLVABLE"));

    let witness = dir.path().join("pair.witness.json");
    let realization = dir.path().join("pair.realization.json");
    let report = dir.path().join("pair.report.json");
    for path in [&witness, &realization, &report] {
        assert!(path.exists(), "missing {}", path.display());
    }

    let out = run(&[
        "witness",
        problem.to_str().unwrap(),
        realization.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("pair.realization.witness.json").exists());
}

#[test]
fn solve_handles_matrix_targets() {
    let dir = tempfile::tempdir().unwrap();
    let z = 3.0f64.sqrt() - 2.0;
    let json = format!(
        r#"{{"nodes": [[0.0, 0.0], [0.5, 0.0]],
            "targets": [
              [[[0.0, 0.0], [0.0, 0.0]], [[-5.0, 0.0], [{z}, 0.0]]],
              [[[0.0, 0.0], [0.5, 0.0]], [[0.0, 0.0], [{mz}, 0.0]]]
            ]}}"#,
        mz = -z
    );
    let problem = write_file(dir.path(), "matrix.json", &json);
    let out = run(&["solve", problem.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {stdout}");
    assert!(stdout.contains("matrix residual"));
}

#[test]
fn solve_reports_unsolvable_data() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_file(dir.path(), "far.json", &gamma_problem_json(0.6));
    let out = run(&["solve", problem.to_str().unwrap()]);
    let code = out.status.code().unwrap();
    assert!(code == 1 || code == 2, "got {code}");
    assert!(!String::from_utf8_lossy(&out.stdout).contains("verdict: SOLVABLE"));
}

#[test]
fn malformed_json_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_file(dir.path(), "broken.json", "{not json");
    let out = run(&["solve", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let missing = dir.path().join("absent.json");
    let out = run(&["solve", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invalid_data_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"nodes": [[0.0, 0.0], [0.0, 0.0]],
                   "values": [[0.1, 0.0, 0.0, 0.0], [-0.1, 0.0, 0.0, 0.0]]}"#;
    let problem = write_file(dir.path(), "dup.json", json);
    let out = run(&["solve", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn oracle_exit_codes_match_the_verdict() {
    let out = run(&["oracle", "--l1", "0", "--l2", "0.5", "--zeta", "0.4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("SOLVABLE"));

    let out = run(&["oracle", "--l1", "0", "--l2", "0.5", "--zeta", "0.6"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["oracle", "--l1", "0", "--l2", "0.5", "--zeta", "0"]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["oracle", "--l1", "1.5", "--l2", "0.5", "--zeta", "0"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn mu_demo_sweep_prints_the_table() {
    let out = run(&["mu-demo", "--a", "10", "--c", "1", "--sweep", "0.5:2.5:5"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("unsolvable"));
    assert!(stdout.lines().filter(|l| l.contains("solvable")).count() >= 5);
}

#[test]
fn mu_demo_rejects_zero_parameter() {
    let out = run(&["mu-demo", "--a", "10", "--c", "0"]);
    assert_eq!(out.status.code(), Some(4));
}
