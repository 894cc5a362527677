use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use wcv_core::json::{matrix_from_json, unfold_result_from_json};
use wcv_core::{Exact, Matrix, Scalar};

fn wcv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcv")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn m(n: usize, v: &[i64]) -> Matrix<Exact> {
    Matrix::from_i64(n, v)
}

#[test]
fn stokes_simple_pole_example() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "q.json", r#"{"n": 2, "mode": "exact", "coeffs": [[1, -1]]}"#);
    let out = wcv(&["stokes", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("singular directions: 2"), "{text}");
    assert!(text.contains("roots = (2,1)") && text.contains("roots = (1,2)"), "{text}");
    assert!(text.contains("dimension audit: stokes = 2, unipotent = 2"), "{text}");
}

#[test]
fn stokes_double_pole_example() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "q.json", r#"{"n": 2, "coeffs": [[0, 0], [1, -1]]}"#);
    let out = wcv(&["stokes", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("singular directions: 4"));
}

#[test]
fn malformed_input_is_rejected() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"n\": 2, \"coeffs\": [[1, ");
    assert_eq!(wcv(&["stokes", "--input", s(&bad)]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(wcv(&["stokes", "--input", s(&missing)]).status.code(), Some(2));
    let wrong_mode = write(&dir, "q.json", r#"{"n": 2, "mode": "float", "coeffs": [[1, -1]]}"#);
    assert_eq!(wcv(&["stokes", "--input", s(&wrong_mode)]).status.code(), Some(2));
}

#[test]
fn unknown_suite_and_bad_flags_are_input_errors() {
    assert_eq!(wcv(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    assert_eq!(wcv(&["verify", "--suite", "qh2", "--mode", "complex"]).status.code(), Some(2));
}

#[test]
fn verify_qh2_passes_and_reports() {
    let out = wcv(&["verify", "--suite", "qh2", "--mode", "exact", "--seed", "7", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["trials"], 20);
    assert_eq!(report["failures"].as_array().unwrap().len(), 0);
    let out = wcv(&["verify", "--suite", "all", "--mode", "float", "--seed", "7", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_is_deterministic() {
    let strip = |o: Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_ms");
        v
    };
    let args = ["verify", "--suite", "unfold", "--mode", "float", "--seed", "3", "--trials", "8"];
    assert_eq!(strip(wcv(&args)), strip(wcv(&args)));
}

const WORKED_PARAMS: &str = r#"{
  "chain": {"n": 2, "order": [1, 2], "partitions": [[1, 1]]},
  "ts": [{"n": 2, "mode": "exact", "entries": [["2", "0"], ["0", "1"]]}]
}"#;

const WORKED_POINT: &str = r#"{"slots": [
  {"value": {"n": 2, "entries": [[1, 0], [0, 1]]}},
  {"value": {"n": 2, "entries": [[3, 0], [0, 5]]}},
  {"value": {"n": 2, "entries": [[1, 1], [0, 1]]}},
  {"value": {"n": 2, "entries": [[1, 0], [1, 1]]}}
]}"#;

#[test]
fn unfold_worked_point() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "params.json", WORKED_PARAMS);
    let point = write(&dir, "point.json", WORKED_POINT);
    let out = wcv(&["unfold", "--point", s(&point), "--params", s(&params)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let res = unfold_result_from_json::<Exact>(&v["result"]).unwrap();
    assert_eq!(res.c, Matrix::identity(2));
    assert_eq!(res.p, Matrix::from_rows(vec![vec![Exact::from_ratio(3, 2), Exact::from_i64(0)], vec![Exact::from_i64(5), Exact::from_i64(5)]]).unwrap());
    assert_eq!(res.ms, vec![m(2, &[4, 2, -3, -1])]);
    assert_eq!(v["report"]["passed"], true);
    assert_eq!(v["report"]["etale_kernel_dim"], 0);
}

#[test]
fn unfold_rejects_params_off_the_chain() {
    let dir = TempDir::new().unwrap();
    // t = I does not have centralizer H_1.
    let params = write(
        &dir,
        "params.json",
        r#"{"chain": {"n": 2, "partitions": [[1, 1]]}, "ts": [{"n": 2, "entries": [[1, 0], [0, 1]]}]}"#,
    );
    let point = write(&dir, "point.json", WORKED_POINT);
    assert_eq!(wcv(&["unfold", "--point", s(&point), "--params", s(&params)]).status.code(), Some(2));
}

#[test]
fn params_search() {
    let dir = TempDir::new().unwrap();
    let chain = write(&dir, "chain.json", r#"{"n": 3, "partitions": [[1, 1, 1], [2, 1]]}"#);
    let out = wcv(&["params", "--chain", s(&chain), "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let ts: Vec<Matrix<Exact>> = v["ts"].as_array().unwrap().iter().map(|t| matrix_from_json(t).unwrap()).collect();
    assert_eq!(ts.len(), 2);
    let exhausted = wcv(&["params", "--chain", s(&chain), "--max-trials", "0"]);
    assert_eq!(exhausted.status.code(), Some(1));
}

#[test]
fn random_point_then_unfold_curve() {
    let dir = TempDir::new().unwrap();
    let out = wcv(&["random-point", "--n", "2", "--genus", "1", "--points", "1", "--max-r", "2", "--seed", "11"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let curve = write(&dir, "curve.json", &v["curve"].to_string());
    let point = write(&dir, "point.json", &v["point"].to_string());
    let out = wcv(&["unfold-curve", "--curve", s(&curve), "--point", s(&point)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let w: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(w["report"]["passed"], true);
    assert_eq!(w["report"]["relation_residual"], 0.0);
    let again = wcv(&["random-point", "--n", "2", "--genus", "1", "--points", "1", "--max-r", "2", "--seed", "11"]);
    assert_eq!(again.stdout, out_of(&v));
}

fn out_of(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).unwrap();
    s.push('\n');
    s.into_bytes()
}
