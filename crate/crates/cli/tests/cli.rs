use std::path::PathBuf;
use std::process::{Command, Output};

fn matmean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matmean")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write_matrix(name: &str, re: [[f64; 2]; 2]) -> PathBuf {
    let path = std::env::temp_dir().join(format!("matmean-cli-{}-{name}.json", std::process::id()));
    let m = serde_json::json!({ "dim": 2, "re": re, "im": [[0.0, 0.0], [0.0, 0.0]] });
    std::fs::write(&path, m.to_string()).unwrap();
    path
}

#[test]
fn geometric_mean_of_commuting_diagonals() {
    let a = write_matrix("a", [[4.0, 0.0], [0.0, 1.0]]);
    let b = write_matrix("b", [[1.0, 0.0], [0.0, 9.0]]);
    let out = matmean(&["mean", "--kind", "G", "--alpha", "0.5", "--A", a.to_str().unwrap(), "--B", b.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let mut eig: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    eig.sort_by(f64::total_cmp);
    assert!((eig[0] - 2.0).abs() < 1e-12 && (eig[1] - 3.0).abs() < 1e-12, "{eig:?}");
}

#[test]
fn same_seed_same_output() {
    let args = ["--seed", "11", "--nmax", "3", "mean", "--kind", "SGt", "--alpha", "1.5", "--p", "2"];
    assert_eq!(matmean(&args).stdout, matmean(&args).stdout);
}

#[test]
fn majorization_failure_is_reported_not_an_error() {
    let x = write_matrix("x", [[3.0, 0.0], [0.0, 1.0]]);
    let y = write_matrix("y", [[2.0, 0.0], [0.0, 1.5]]);
    let out = matmean(&["majorize", "--X", x.to_str().unwrap(), "--Y", y.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(2));
    assert_eq!(json(&out)["holds"], serde_json::Value::Bool(false));
}

#[test]
fn bad_parameters_exit_with_code_two() {
    let out = matmean(&["mean", "--kind", "Arith", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_claim_is_rejected() {
    assert_eq!(matmean(&["check", "NoSuchClaim"]).status.code(), Some(2));
}

#[test]
fn claim_list_names_the_catalog() {
    let out = matmean(&["check", "--list"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Thm3.1a") && text.contains("Thm3.19"));
}

#[test]
fn single_claim_check_succeeds() {
    let out = matmean(&["--trials", "20", "check", "Thm3.1a"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)[0]["verdict"], "Confirmed");
}
