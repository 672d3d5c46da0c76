use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_landau-radial"))
}

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn invoke(args: &[&str], config: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"{
    "schema": 1,
    "grid": {"n": 64, "r_max": 8.0},
    "initial": {"profile": {"kind": "maxwellian", "temperature": 1.0}, "mass": 2.0},
    "evolution": {"model": "landau", "dt_init": 0.02},
    "horizon": 0.5,
    "snapshot_every": 0.25,
    "require_completion": true
}"#;

#[test]
fn ks_large_data_run_completes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = invoke(&["run"], &sample("ks_large_data.json"), tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&tmp.path().join("summary.json"));
    assert_eq!(summary["termination"]["kind"], "completed");
    assert_eq!(summary["termination"]["t"], 10.0);
    assert_eq!(summary["classification"], "bounded");
    assert_eq!(summary["modulus"]["concentrating"], false);

    let checks = json(&tmp.path().join("diagnostics.json"));
    for c in checks.as_array().unwrap() {
        for key in ["check_name", "paper_ref", "tolerance", "value", "pass"] {
            assert!(c.get(key).is_some(), "missing {key} in {c}");
        }
    }
    let mass = checks.as_array().unwrap().iter().find(|c| c["check_name"] == "mass_drift").unwrap();
    assert_eq!(mass["pass"], true);

    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,i,r,f,a,astar,M"));
    // 21 snapshots of 401 nodes
    assert_eq!(csv.lines().count(), 1 + 21 * 401);
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 7);
    assert_eq!(first[1], "0");
    let t: f64 = first[0].parse().unwrap();
    assert_eq!(t, 0.0);
}

#[test]
fn invalid_alpha_exits_one_and_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("\"landau\"", "{\"ks_alpha\": 1.5}"));
    let out = invoke(&["run"], &cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ks_alpha"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_field_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("\"horizon\"", "\"horizn\": 1, \"horizon\""));
    let out = invoke(&["run"], &cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizn"));
}

#[test]
fn early_stop_exits_two_only_when_completion_is_required() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("\"dt_init\": 0.02", "\"dt_init\": 0.02, \"blowup_threshold\": 1e-6");
    let cfg = write_config(tmp.path(), &text);
    let out = invoke(&["run"], &cfg, &tmp.path().join("a"));
    assert_eq!(out.status.code(), Some(2));
    let summary = json(&tmp.path().join("a/summary.json"));
    assert_eq!(summary["termination"]["kind"], "blowup_detected");

    let relaxed = write_config(tmp.path(), &text.replace("\"require_completion\": true", "\"require_completion\": false"));
    let out = invoke(&["run"], &relaxed, &tmp.path().join("b"));
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = sample("verify_ball.json");
    for dir in ["a", "b"] {
        let out = invoke(&["verify", "--seed", "3"], &cfg, &tmp.path().join(dir));
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(tmp.path().join("a/verify.json")).unwrap();
    let b = fs::read(tmp.path().join("b/verify.json")).unwrap();
    assert_eq!(a, b);
    let out = invoke(&["verify", "--seed", "4"], &cfg, &tmp.path().join("c"));
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(a, fs::read(tmp.path().join("c/verify.json")).unwrap());

    let cfg = write_config(tmp.path(), SMALL);
    for dir in ["r1", "r2"] {
        assert_eq!(invoke(&["run"], &cfg, &tmp.path().join(dir)).status.code(), Some(0));
    }
    for file in ["trajectory.csv", "diagnostics.json", "summary.json"] {
        assert_eq!(fs::read(tmp.path().join("r1").join(file)).unwrap(), fs::read(tmp.path().join("r2").join(file)).unwrap(), "{file}");
    }
}

#[test]
fn verify_uniform_ball_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = invoke(&["verify"], &sample("verify_ball.json"), tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let report = json(&tmp.path().join("verify.json"));
    assert_eq!(report["seed"], 7);
    assert_eq!(report["coefficients"].as_array().unwrap().len(), 10);
    assert_eq!(report["kernel"].as_array().unwrap().len(), 10);
    assert_eq!(report["all_pass"], true, "{report:#}");
}

#[test]
fn barriers_report_covers_the_scans() {
    let tmp = tempfile::tempdir().unwrap();
    let out = invoke(&["barriers"], &sample("ks_large_data.json"), tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&tmp.path().join("barriers.json"));
    let sup = report["supersolutions"].as_array().unwrap();
    let ms: Vec<f64> = sup.iter().map(|r| r["m"].as_f64().unwrap()).collect();
    assert_eq!(ms, vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]);
    assert_eq!(report["ugamma"].as_array().unwrap().len(), 9);
    assert_eq!(report["barrier"]["all_pass"], true);
}

#[test]
fn sweep_output_does_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = sample("sweep_ks_alpha.json");
    for (dir, workers) in [("w1", "1"), ("w3", "3")] {
        let out = invoke(&["sweep", "--workers", workers], &cfg, &tmp.path().join(dir));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let index = json(&tmp.path().join("w1/sweep.json"));
    assert_eq!(index.as_array().unwrap().len(), 6);
    assert_eq!(index[5]["params"]["model"]["ks_alpha"], 1.0);
    assert_eq!(index[5]["params"]["mass"], 10.0);
    for k in 0..6 {
        let point = format!("point_{k:04}");
        for file in ["config.json", "trajectory.csv", "diagnostics.json", "summary.json"] {
            let a = fs::read(tmp.path().join("w1").join(&point).join(file)).unwrap();
            let b = fs::read(tmp.path().join("w3").join(&point).join(file)).unwrap();
            assert_eq!(a, b, "{point}/{file}");
        }
    }
    assert_eq!(fs::read(tmp.path().join("w1/sweep.json")).unwrap(), fs::read(tmp.path().join("w3/sweep.json")).unwrap());
}
