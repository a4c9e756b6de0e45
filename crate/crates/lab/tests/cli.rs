use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic-lab"))
        .args(args)
        .output()
        .expect("spawn dyadic-lab")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn identities_pass_in_rational_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"n": 1, "depth": 3}, "identities": {"draws": 3}}"#,
    );
    let out = lab(&[
        "identities",
        "--config",
        &cfg,
        "--mode",
        "rational",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("identities_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mode"], "rational");
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"n": 1, "depht": 3}}"#);
    let out = lab(&["bounds", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
}

#[test]
fn malformed_json_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{ not json");
    assert_eq!(lab(&["norm", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn large_models_need_the_force_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"n": 2, "depth": 13}}"#);
    let out = lab(&["norm", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("force-large"));
}

#[test]
fn same_seed_gives_identical_files() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        cfg_dir.path(),
        r#"{"model": {"n": 1, "depth": 6}, "dominate": {"cell_csv": true}}"#,
    );
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = lab(&[
            "dominate",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stdout)
        );
        [
            "domination.json",
            "domination_cells.csv",
            "domination_report.json",
        ]
        .map(|f| fs::read(dir.path().join(f)).unwrap())
    };
    let (a, b, c) = (run("7"), run("7"), run("8"));
    assert_eq!(a, b);
    assert_ne!(a[0], c[0]);
}

#[test]
fn sharpness_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"n": 1, "depth": 6}, "sharpness": {"alphas": [-0.5, 0.5]}}"#,
    );
    let out = lab(&[
        "sharpness",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("sharpness.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("alpha,"));
}
