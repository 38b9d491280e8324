use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_ostb");

const SMALL: &str = r#"{
  "harvest": {"kind": "uniform", "lo": 0, "hi": 0.003},
  "sim": {"horizon_seconds": 100, "replications": 2}
}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cases = [
        ("unknown.json", "{\"harvest\": {\"kind\": \"uniform\", \"lo\": 0, \"hi\": 0.003},\n \"device\": {\"capacitanse\": 1}}"),
        ("noharvest.json", r#"{"device": {}}"#),
        ("window.json", r#"{"device": {"sensing_deadline": 48}, "harvest": {"kind": "uniform", "lo": 0, "hi": 0.003}}"#),
        ("negative.json", r#"{"harvest": {"kind": "uniform", "lo": 0.002, "hi": 0.001}}"#),
        ("broken.json", "{ not json"),
    ];
    for (name, text) in cases {
        let cfg = write_config(d, name, text);
        let o = run(d, &["build", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
    }
    let cfg = write_config(d, "unknown2.json", cases[0].1);
    let msg = stderr(&run(d, &["build", "--config", cfg.to_str().unwrap()]));
    assert!(msg.contains("capacitanse") && msg.contains("line 2"), "{msg}");
    assert_eq!(run(d, &["build", "--config", "missing.json"]).status.code(), Some(2));
    assert_eq!(run(d, &["build"]).status.code(), Some(2));
}

#[test]
fn build_writes_the_reference_model() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let o = run(tmp.path(), &["build", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model = json(&tmp.path().join("o/model.json"));
    assert_eq!(model["states"].as_array().unwrap().len(), 3600);
    assert_eq!(model["grid"].as_array().unwrap().len(), 30);
    let manifest = json(&tmp.path().join("o/manifest.json"));
    assert_eq!(manifest["command"], "build");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 1);
}

#[test]
fn solve_then_simulate_with_the_saved_policy() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = write_config(d, "c.json", SMALL);
    let c = cfg.to_str().unwrap();
    let o = run(d, &["solve", "--config", c, "--out", "o", "--verify-unichain"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["policy.json", "solution.json", "thresholds.csv", "thresholds.json", "manifest.json"] {
        assert!(d.join("o").join(f).exists(), "{f}");
    }
    let o = run(d, &["simulate", "--config", c, "--out", "o", "--policy", "o/policy.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("o/simulate_ostb.csv")).unwrap();
    assert!(csv.lines().count() > 1);

    // a policy for a different model is a configuration error
    let other = write_config(d, "other.json", &SMALL.replace("0.003", "0.006"));
    let o = run(d, &["simulate", "--config", other.to_str().unwrap(), "--out", "o2", "--policy", "o/policy.json"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn compare_is_reproducible_and_seeded() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = write_config(d, "c.json", SMALL);
    let c = cfg.to_str().unwrap();
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let o = run(d, &["compare", "--config", c, "--out", out, "--seed", "7", "--threads", threads]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["comparison.csv", "comparison.json", "comparison_report.json"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    let report = json(&d.join("a/comparison_report.json"));
    assert_eq!(report["data"]["baseline"]["scheduler"], "alap");
    assert_eq!(report["data"]["candidate"]["scheduler"], "ostb");
    assert_eq!(json(&d.join("a/manifest.json"))["seed"], 7);
    let o = run(d, &["compare", "--config", c, "--out", "c", "--seed", "8", "--format", "json"]);
    assert!(o.status.success());
    assert!(!d.join("c/comparison.csv").exists());
    assert_ne!(
        json(&d.join("a/comparison_report.json"))["config_hash"],
        json(&d.join("c/comparison_report.json"))["config_hash"]
    );
}

#[test]
fn sweep_over_capacitance() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = write_config(d, "c.json", SMALL);
    let o = run(
        d,
        &["sweep", "--config", cfg.to_str().unwrap(), "--out", "o", "--var", "capacitance_mf", "--values", "2.7,4.7", "--format", "csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("o/sweep_capacitance_mf.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("capacitance_mf,model_tasks,model_reward,ostb_rate"));
    assert_eq!(lines.count(), 2);
    let o = run(d, &["sweep", "--config", cfg.to_str().unwrap(), "--var", "gamma"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fig3_recipe_golden_shape() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["sweep", "--recipe", "fig3", "--out", "o"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("o/fig3.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "task,level,voltage,p_safe,basic,sigmoid_theta_0.7,sigmoid_theta_0.9,sigmoid_theta_0.95"
    );
    assert_eq!(lines.count(), 60);
    let v = json(&tmp.path().join("o/fig3.json"));
    assert_eq!(v["recipe"], "fig3");
    assert_eq!(v["data"].as_array().unwrap().len(), 60);
    assert_eq!(v["data"][0]["task"], "sensing");
    assert_eq!(v["data"][59]["task"], "transmitting");
    assert_eq!(v["data"][29]["basic"], 1.0);
}

#[test]
fn verify_reports_structure() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    // a stepped policy is expected at U[0,6]
    let cfg = write_config(d, "c.json", &SMALL.replace("0.003", "0.006"));
    let o = run(d, &["verify", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("o/verify.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",yes")), "{csv}");
    // the floor-level exception at U[0,3] is reported as a verification failure
    let cfg = write_config(d, "c3.json", SMALL);
    let o = run(d, &["verify", "--config", cfg.to_str().unwrap(), "--out", "o3"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("threshold"), "{}", stderr(&o));
}
