use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn flock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn section4_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/section4.json")
}

fn write_config(dir: &TempDir, name: &str, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(section4_config()).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.path().join(name);
    fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn repro_bundle_is_complete_and_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for dir in [&a, &b] {
        let out = flock(&["repro-section4", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in [
        "tau0_T10.csv",
        "tau0_T50.csv",
        "tau5_T20.csv",
        "summary.txt",
        "tau0_T50/trajectory.csv",
        "tau0_T50/diagnostics.csv",
        "tau5_T20/diagnostics.csv",
    ] {
        let (x, y) = (
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
        );
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between runs");
    }
    let summary = fs::read_to_string(a.path().join("summary.txt")).unwrap();
    assert!(summary.contains("tau0_T50: tau = 0, T = 50, classification = consensus"));
}

#[test]
fn simulate_writes_expected_columns() {
    let dir = TempDir::new().unwrap();
    let out = flock(&[
        "simulate",
        "--config",
        section4_config().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let diag = fs::read_to_string(dir.path().join("section4/diagnostics.csv")).unwrap();
    let mut lines = diag.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,X,V,d_X,d_V,mu,psi_star,R_tau,sigma_tau,lyap_L2,lyap_Linf,bound_V,bound_dV"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[2], "0.1111111111111111");
    let traj = fs::read_to_string(dir.path().join("section4/trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x_1_1,x_1_2,v_1_1,v_1_2,x_2_1,"));
    assert!(!traj.contains("\r"));
}

#[test]
fn nonpositive_step_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.json", |v| v["integration"]["h"] = 0.0.into());
    let out = flock(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integration.h"));
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "typo.json", |v| v["delay"]["taux"] = 1.0.into());
    let out = flock(&["certify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn slope_bound_violation_cites_c() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "fast.json", |v| {
        v["delay"] = serde_json::json!({"kind": "sinusoidal", "a": 1.0, "b": 0.6, "omega": 2.0})
    });
    let out = flock(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("delay.c") && err.contains("< 1"), "{err}");
}

#[test]
fn gate_failure_is_a_valid_certificate() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "slow.json", |v| {
        v["delay"]["tau"] = 2.0.into();
        v["model"]["potential"] = serde_json::json!({"kind": "constant", "psi0": 0.9});
        v["integration"]["t_end"] = 5.0.into();
    });
    let out = flock(&["certify", "--config", cfg.to_str().unwrap(), "--both"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.matches("delay above threshold").count(), 2, "{text}");
}

#[test]
fn certify_below_threshold_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "fast.json", |v| {
        v["delay"]["tau"] = 0.1.into();
        v["model"]["potential"] = serde_json::json!({"kind": "constant", "psi0": 0.9});
        v["integration"]["t_end"] = 10.0.into();
    });
    let out = flock(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--l2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("certificate: PASS") && !text.contains("[Linf]"), "{text}");
    let diag = fs::read_to_string(dir.path().join("certify/diagnostics.csv")).unwrap();
    let row: Vec<&str> = diag.lines().nth(1).unwrap().split(',').collect();
    assert_ne!(row[9], "NaN");
    assert_eq!(row[10], "NaN");
}

#[test]
fn bad_bracket_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let probes = dir.path().join("probes.csv");
    let out = flock(&[
        "threshold",
        "--config",
        section4_config().to_str().unwrap(),
        "--tau-min",
        "0.05",
        "--tau-max",
        "0.1",
        "--tol",
        "0.01",
        "--out",
        probes.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bracket"));
}

#[test]
fn threshold_writes_probe_csv() {
    let dir = TempDir::new().unwrap();
    let probes = dir.path().join("probes.csv");
    let out = flock(&[
        "threshold",
        "--config",
        section4_config().to_str().unwrap(),
        "--tau-min",
        "0.05",
        "--tau-max",
        "5",
        "--tol",
        "0.5",
        "--out",
        probes.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(probes).unwrap();
    assert!(csv.starts_with(
        "tau,horizon,classification,counted\n0.050000000000000003,200,consensus,consensus\n5,200,divergent,divergent\n"
    ));
}

#[test]
fn missing_config_is_an_io_error() {
    let out = flock(&["certify", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/config.json"));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(flock(&["threshold", "--config", "x.json"]).status.code(), Some(2));
    assert_eq!(
        flock(&["certify", "--config", "x.json", "--l2", "--linf"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn selftest_passes() {
    let out = flock(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("8/8 checks passed"));
}
