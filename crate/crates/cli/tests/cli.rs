use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_beltrami"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(t) = threads {
        cmd.env("BELTRAMI_THREADS", t);
    } else {
        cmd.env_remove("BELTRAMI_THREADS");
    }
    cmd.output().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

fn check<'a>(s: &'a Value, name: &str) -> &'a Value {
    s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"].as_str().unwrap().starts_with(name))
        .unwrap_or_else(|| panic!("missing check {name}"))
}

const ZERO_64: &str = r#"{"schema_version": 1,
  "grid": {"n": 64, "half_width": 2.0, "support_radius": 1.5},
  "coefficients": {"kind": "reduced", "k": 0.0, "lambda": {"type": "const", "re": 0.0}}}"#;

#[test]
fn holomorphic_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ZERO_64);
    let out = run(
        &["verify", "--config", cfg.to_str().unwrap()],
        dir.path(),
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(dir.path());
    assert_eq!(s["all_hard_pass"], Value::Bool(true));
    for c in s["checks"].as_array().unwrap() {
        if c["name"].as_str().unwrap().ends_with(".residual") {
            assert!(c["value"].as_f64().unwrap() <= 1e-12, "{c}");
        }
    }
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn constant_general_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1,
          "grid": {"n": 256, "half_width": 2.0, "support_radius": 1.5},
          "coefficients": {"kind": "general", "k": 0.45,
            "mu": {"type": "const", "re": 0.3}, "nu": {"type": "const", "re": 0.0, "im": 0.1}}}"#,
    );
    let out = run(
        &["recover", "--config", cfg.to_str().unwrap()],
        dir.path(),
        Some("2"),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(dir.path());
    assert!(
        check(&s, "coefficient_error")
            .get("value")
            .unwrap()
            .as_f64()
            .unwrap()
            <= 1e-2
    );
    assert!(
        check(&s, "regular_fraction")
            .get("value")
            .unwrap()
            .as_f64()
            .unwrap()
            >= 0.999
    );
    assert!(dir.path().join("out/mu_hat.bin").exists());
}

#[test]
fn adjoint_probe_writes_full_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1,
          "grid": {"n": 128, "half_width": 2.0, "support_radius": 1.5},
          "coefficients": {"kind": "random_reduced", "k": 0.5},
          "probes": {"test_functions": 4}}"#,
    );
    let out = run(
        &[
            "adjoint-probe",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "3",
        ],
        dir.path(),
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("out/reverse_holder.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "center_re,center_im,radius,lhs,rhs,c_hat");
    assert_eq!(lines.len(), 76);
    assert!(dir.path().join("out/decay.csv").exists());
}

#[test]
fn malformed_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version": 1, "grid": {"n": 64}}"#);
    let out = run(
        &["solve", "--config", cfg.to_str().unwrap()],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(
        dir.path(),
        &ZERO_64.replace("\"schema_version\": 1", "\"schema_version\": 9"),
    );
    let out = run(
        &["solve", "--config", cfg.to_str().unwrap()],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(dir.path(), &ZERO_64.replace("\"n\": 64", "\"n\": 60"));
    let out = run(
        &["solve", "--config", cfg.to_str().unwrap()],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(dir.path(), ZERO_64);
    let out = run(
        &["solve", "--config", cfg.to_str().unwrap()],
        dir.path(),
        Some("zero"),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_convergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1,
          "grid": {"n": 64, "half_width": 2.0, "support_radius": 1.5},
          "coefficients": {"kind": "random_reduced", "k": 0.8},
          "solver": {"max_iter": 1}}"#,
    );
    let out = run(
        &["solve", "--config", cfg.to_str().unwrap()],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(summary(dir.path())["converged"], Value::Bool(false));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1,
          "grid": {"n": 128, "half_width": 2.0, "support_radius": 1.5},
          "coefficients": {"kind": "random_general", "k": 0.4}}"#,
    );
    let args = [
        "wronskian",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "11",
    ];
    assert_eq!(run(&args, dir.path(), Some("1")).status.code(), Some(0));
    let first = fs::read(dir.path().join("out/summary.json")).unwrap();
    let wr = fs::read(dir.path().join("out/wronskian.bin")).unwrap();
    assert_eq!(run(&args, dir.path(), Some("3")).status.code(), Some(0));
    assert_eq!(
        first,
        fs::read(dir.path().join("out/summary.json")).unwrap()
    );
    assert_eq!(wr, fs::read(dir.path().join("out/wronskian.bin")).unwrap());
}
