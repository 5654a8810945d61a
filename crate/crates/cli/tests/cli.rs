//! End-to-end runs of the `kgm` binary.

use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use kgm_core::mesh::io::{write_field, FieldFormat};
use kgm_core::{Grid, ScalarField};
use serde_json::Value;

fn kgm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgm")).args(args).output().expect("spawn kgm")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

const LINEAR: &str = r#"
[grid]
counts = [9, 9, 9]
[params]
m = 1.0
q = 0.1
[boundary]
kind = "constant"
value = 0.05
[output]
dir = "out"
"#;

#[test]
fn verify_accepts_the_stored_trivial_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = Arc::new(Grid::cube(1.0, 7).unwrap());
    let zero = ScalarField::zeros(&grid);
    write_field(tmp.path().join("u.csv"), &zero, FieldFormat::Csv).unwrap();
    write_field(tmp.path().join("phi.bin"), &zero, FieldFormat::F64le).unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"
[grid]
counts = [7, 7, 7]
[params]
m = 1.0
q = 0.5
[boundary]
kind = "constant"
value = 0.0
[verify]
u = "u.csv"
phi = "phi.bin"
[output]
dir = "out"
"#,
    );
    let out = kgm(&["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    assert_eq!(r["status"], "pass");
    let certs = r["certificates"].as_array().unwrap();
    assert!(certs.iter().any(|c| c["name"] == "nonexistence_identity"));
    assert!(certs.iter().all(|c| c["passed"] == true));
    assert_eq!(r["solutions"][0]["nontrivial"], false);
}

#[test]
fn solve_linear_writes_fields_history_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), LINEAR);
    let out = kgm(&["solve-linear", "--config", &cfg, "--physical-units"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("necessary") && stdout.contains("PASS"));
    let r = report(tmp.path());
    assert_eq!(r["solutions"][0]["nontrivial"], true);
    assert!(r["solutions"][0]["grad_norm"].as_f64().unwrap() <= 1e-6);
    assert_eq!(r["units"], "physical");
    let qp = r["params"]["q_physical"].as_f64().unwrap();
    assert!((qp * (4.0 * std::f64::consts::PI).sqrt() - 0.1).abs() < 1e-15);
    for f in ["u_1.csv", "phi_1.csv", "chi.csv", "history.csv"] {
        assert!(tmp.path().join("out").join(f).exists(), "{f}");
    }
    let history = std::fs::read_to_string(tmp.path().join("out/history.csv")).unwrap();
    assert!(history.starts_with("solution,iteration,value,grad_norm,step"));
    assert!(r["timings"]["total"].as_f64().unwrap() > 0.0);
}

#[test]
fn flags_override_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), LINEAR);
    let out_dir = tmp.path().join("elsewhere");
    let out = kgm(&[
        "solve-linear",
        "--config",
        &cfg,
        "--grid",
        "7,7,9",
        "--tol",
        "1e-7",
        "--seed",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["grid"]["counts"], serde_json::json!([7, 7, 9]));
    assert_eq!(r["seed"], 5);
    assert!(r["solutions"][0]["grad_norm"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{LINEAR}\n[solver]\ntolerance = 1\n"));
    let out = kgm(&["solve-linear", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tolerance") && err.contains("line"), "{err}");

    // multi needs a mean-zero datum
    let cfg = write_config(tmp.path(), &format!("{LINEAR}\n[nonlinearity]\nkind = \"power\"\np = 4.0\n"));
    let out = kgm(&["multi", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("boundary"));

    let out = kgm(&["solve-linear", "--config", &cfg, "--grid", "9,9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three_and_keeps_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{LINEAR}\n[solver]\nmax_iter = 1\n"));
    let out = kgm(&["solve-linear", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(tmp.path());
    assert_eq!(r["status"], "error");
    assert!(r["error"].as_str().unwrap().contains("did not converge"));
    assert!(r["lifting"]["kappa"].as_f64().unwrap() > 0.0);
}

#[test]
fn render_flags_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("r.json");
    std::fs::write(&path, r#"{"certificates": []}"#).unwrap();
    let out = kgm(&["render", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1);

    std::fs::write(
        &path,
        r#"{"certificates": [
            {"scope": "run", "name": "ok", "passed": true, "measured": 0.5, "tolerance": 0.0},
            {"scope": "run", "name": "bad", "passed": false, "measured": -2.0, "tolerance": 0.0}]}"#,
    )
    .unwrap();
    let out = kgm(&["render", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.lines().nth(2).unwrap().contains("FAIL"));

    std::fs::write(&path, "not json").unwrap();
    assert_eq!(kgm(&["render", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn identical_runs_give_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let body = LINEAR.replace("[output]", "[solver]\ninitial = \"random\"\n[output]");
    for dir in [&a, &b] {
        let cfg = write_config(dir.path(), &body);
        assert_eq!(kgm(&["solve-linear", "--config", &cfg, "--seed", "9"]).status.code(), Some(0));
    }
    let strip = |d: &Path| {
        kgm_cli::report::without_timings(&std::fs::read_to_string(d.join("out/report.json")).unwrap()).unwrap()
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    for f in ["u_1.csv", "phi_1.csv", "history.csv"] {
        assert_eq!(
            std::fs::read(a.path().join("out").join(f)).unwrap(),
            std::fs::read(b.path().join("out").join(f)).unwrap()
        );
    }
}
