use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lrsim::output::parse_curve_csv;

fn lrsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrsim")).args(args).output().expect("binary runs")
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/cli").join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn stdout_ok(args: &[&str]) -> String {
    let out = lrsim(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn bell_sampled() {
    let out = stdout_ok(&["bell", "--model", "simple-bell", "--samples", "20000", "--seed", "7"]);
    assert_eq!(out, golden("bell_simple.txt"));
}

#[test]
fn bell_exact() {
    let out = stdout_ok(&["bell", "--model", "ncopy-tomography", "--n-copies", "3", "--q", "0.3", "--exact"]);
    assert_eq!(out, golden("bell_exact_tomography.txt"));
}

#[test]
fn bell_summary_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("point.csv");
    let p = path.to_str().unwrap();
    stdout_ok(&["bell", "--model", "chaotic-ball", "--q", "0.2", "--samples", "5000", "--seed", "1", "--out", p]);
    assert_eq!(fs::read_to_string(&path).unwrap(), golden("bell_point.csv"));
}

#[test]
fn steer_trusted() {
    let out =
        stdout_ok(&["steer", "--model", "trusted-steering-m", "--m-choices", "3", "--samples", "20000", "--seed", "7"]);
    assert_eq!(out, golden("steer_trusted.txt"));
}

#[test]
fn steer_unanimity() {
    let out = stdout_ok(&[
        "steer",
        "--model",
        "ncopy-steering",
        "--n-copies",
        "3",
        "--samples",
        "20000",
        "--seed",
        "7",
        "--workers",
        "2",
    ]);
    assert_eq!(out, golden("steer_unanimity.txt"));
}

#[test]
fn qubit_table() {
    let out = stdout_ok(&["qubit", "--omega", "1", "--t-a", "1.5707963", "--t-b", "3.1415927"]);
    assert_eq!(out, golden("qubit.txt"));
}

#[test]
fn curves_to_stdout() {
    let out = stdout_ok(&[
        "curves",
        "--model",
        "ncopy-tomography",
        "--n-copies",
        "inf",
        "--q",
        "0,0.3",
        "--samples",
        "20000",
        "--seed",
        "7",
    ]);
    assert_eq!(out, golden("curves_inf.csv"));
    let points = parse_curve_csv(&out).unwrap();
    assert_eq!(points[0].eta, 1.0);
    assert!((points[0].value - 2.0).abs() <= 3.0 * points[0].stderr);
}

#[test]
fn curves_to_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let svg = dir.path().join("c.svg");
    let out = stdout_ok(&[
        "curves",
        "--kind",
        "steering",
        "--n-copies",
        "1-3",
        "--q",
        "0,0.5",
        "--samples",
        "5000",
        "--seed",
        "3",
        "--workers",
        "2",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(out.starts_with("wrote 6 rows"));
    assert_eq!(fs::read_to_string(&csv).unwrap(), golden("curves_steering.csv"));
    assert_eq!(fs::read_to_string(&svg).unwrap(), golden("curves_steering.svg"));
}

#[test]
fn causality_file() {
    let path = data("fig1a.scenario");
    let out = stdout_ok(&["causality", path.to_str().unwrap()]);
    let expected = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fig1a.txt")).unwrap();
    assert_eq!(out, expected);
}

#[test]
fn oracle_check() {
    assert_eq!(stdout_ok(&["oracle-check"]), golden("oracle_check.txt"));
}

#[test]
fn min_copies() {
    let out = stdout_ok(&["min-copies", "--kind", "steering", "--value", "0.34", "--eta", "0.8", "--exact"]);
    assert_eq!(out, golden("min_copies.txt"));
    let out = stdout_ok(&["min-copies", "--kind", "bell", "--value", "2.8", "--eta", "0.99", "--exact"]);
    assert_eq!(out, "none\n");
}

fn fails_with(args: &[&str], status: i32, needle: &str) {
    let out = lrsim(args);
    assert_eq!(out.status.code(), Some(status), "{args:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(needle), "{args:?}: {err}");
}

#[test]
fn validation_failures_exit_one() {
    fails_with(&["bell", "--model", "simple-bell", "--samples", "0"], 1, "--samples");
    fails_with(&["bell", "--model", "simple-bell", "--bogus"], 1, "--bogus");
    fails_with(&["bell", "--model", "ncopy-tomography", "--q", "1.5"], 1, "--q");
    fails_with(&["bell", "--model", "ncopy-tomography", "--n-copies", "0"], 1, "--n-copies");
    fails_with(&["steer", "--model", "ncopy-steering", "--n-copies", "inf"], 1, "--n-copies");
    fails_with(&["steer", "--model", "trusted-steering-m", "--m-choices", "7"], 1, "--m-choices");
    fails_with(&["curves", "--workers", "0"], 1, "--workers");
    fails_with(&["min-copies", "--kind", "steering", "--value", "0.4", "--eta", "0", "--exact"], 1, "--eta");
    fails_with(&["causality", "/nonexistent/scenario"], 1, "/nonexistent/scenario");
}

#[test]
fn degenerate_statistics_exit_two() {
    fails_with(&["bell", "--model", "chaotic-ball", "--q", "0.95", "--samples", "10000"], 2, "no coincidences");
    fails_with(&["curves", "--n-copies", "inf", "--q", "0.95", "--exact"], 2, "no point");
}
