//! The `edmlab` binary: subcommands, overrides and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn edmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edmlab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_names_every_experiment() {
    let out = edmlab(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for e in edmlab::Experiment::ALL {
        assert!(text.lines().any(|l| l.starts_with(e.name())), "{e}");
    }
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", r#"{"experiment": "oja-pca", "seed": 3, "params": {"steps": 10}}"#);
    let out = edmlab(&["validate", "--config", &good]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let unknown = write(dir.path(), "unknown.json", r#"{"experiment": "no-such-thing", "seed": 0}"#);
    assert_eq!(edmlab(&["validate", "--config", &unknown]).status.code(), Some(2));

    let bad = write(dir.path(), "bad.json", r#"{"experiment": "oja-pca", "seed": 0, "params": {"eta": -1}}"#);
    let out = edmlab(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));

    let missing = dir.path().join("absent.json");
    assert_eq!(edmlab(&["validate", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(edmlab(&[]).status.code(), Some(2));
    assert_eq!(edmlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(edmlab(&["run"]).status.code(), Some(2));
    assert_eq!(edmlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn run_on_the_bundled_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let instance = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/triangle.txt");
    let cfg = format!(
        r#"{{"experiment": "oim-maxcut", "seed": 1, "params": {{"instance": {:?}, "regression_draws": 20}}}}"#,
        instance.to_str().unwrap()
    );
    let cfg = write(dir.path(), "tri.json", &cfg);
    let out_dir = dir.path().join("out");
    let out = edmlab(&["run", "--config", &cfg, "--seed", "9", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("best_H = -1"), "{stdout}");
    assert!(stdout.contains("cut = 2"), "{stdout}");

    let summary = std::fs::read_to_string(out_dir.join("oim-maxcut_summary.csv")).unwrap();
    assert!(summary.contains("best_H,-1\n") && summary.contains("cut,2\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("oim-maxcut_report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
}

#[test]
fn bad_thread_setting_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write(dir.path(), "c.json", r#"{"experiment": "eqprop-gradcheck", "seed": 0, "params": {"instances": 1}}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_edmlab"))
        .args(["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()])
        .env(edmlab::THREADS_ENV, "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundled_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = edmlab(&["validate", "--config", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        seen += 1;
    }
    assert!(seen >= edmlab::Experiment::ALL.len());
}
