use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qassign(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qassign"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assign_json(dir: &Path, args: &[&str]) -> Value {
    let out = qassign(dir, args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn entry(doc: &Value, i: usize, j: usize) -> (f64, f64) {
    let z = &doc["state"][i][j];
    (z[0].as_f64().unwrap(), z[1].as_f64().unwrap())
}

#[test]
fn detector_pure_prior_at_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let doc = assign_json(dir.path(), &["assign", "bns", "aam-pure", "--bloch", "0,0,0"]);
    let diag: Vec<f64> = (0..4).map(|k| entry(&doc, k, k).0).collect();
    for (d, e) in diag.iter().zip([0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]) {
        assert!((d - e).abs() < 1e-14);
    }
    assert!((doc["pattern"]["square"].as_f64().unwrap() + 1.0 / 12.0).abs() < 1e-14);
    assert!(dir.path().join("out/assign_bns_aam-pure.json").exists());
}

#[test]
fn angular_momentum_mep_is_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let doc = assign_json(dir.path(), &["assign", "su2", "mep", "--j", "1.5", "--bloch", "0,0,0.7"]);
    assert!(doc["residual"].as_f64().unwrap() < 1e-10);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                let (re, im) = entry(&doc, i, j);
                assert!(re.abs() < 1e-14 && im.abs() < 1e-14);
            }
        }
    }
}

#[test]
fn partial_trace_product_state() {
    let dir = tempfile::tempdir().unwrap();
    let doc = assign_json(dir.path(), &["assign", "ptrace", "aam-pure", "--de", "2", "--bloch", "0,0,1"]);
    let diag: Vec<f64> = (0..4).map(|k| entry(&doc, k, k).0).collect();
    assert_eq!(diag, vec![0.5, 0.5, 0.0, 0.0]);
}

#[test]
fn matrix_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rho.json");
    std::fs::write(&file, "[[[0.75, 0], [0.1, -0.2]], [[0.1, 0.2], [0.25, 0]]]").unwrap();
    let doc = assign_json(dir.path(), &["assign", "bns", "mep", "--rho-file", file.to_str().unwrap()]);
    assert!(doc["converged"].as_bool().unwrap());
    assert!((entry(&doc, 0, 0).0 - 0.75).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| qassign(dir.path(), args).status.code();
    assert_eq!(code(&["assign", "su2", "mep", "--bloch", "0,0,0.5"]), Some(2));
    assert_eq!(code(&["assign", "bns", "aam-pure", "--bloch", "0,0,2"]), Some(2));
    assert_eq!(code(&["assign", "bns", "aam-pure", "--bloch", "0,0"]), Some(2));
    assert_eq!(code(&["assign", "bns", "aam-pure", "--bloch", "0,0,0", "--tol", "-1"]), Some(2));
    assert_eq!(code(&["figure", "12"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    // rho00 = 0 makes the detector assignment singular
    assert_eq!(code(&["assign", "bns", "aam-pure", "--bloch", "0,0,-1"]), Some(3));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), r#"{"seed": 5, "output_dir": "from_file"}"#).unwrap();
    let doc = assign_json(dir.path(), &["--config", "run.json", "--seed", "9", "assign", "bns", "mep", "--bloch", "0.1,0,0"]);
    assert_eq!(doc["meta"]["seed"], "9");
    assert!(dir.path().join("from_file/assign_bns_mep.json").exists());
    std::fs::write(dir.path().join("bad.json"), r#"{"seeed": 5}"#).unwrap();
    let out = qassign(dir.path(), &["--config", "bad.json", "validate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figure_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        let res = qassign(dir.path(), &["figure", "9", "--out", "a"]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        ["fig9_work.csv", "fig9_manifest.json"].map(|name| std::fs::read(dir.path().join("a").join(name)).unwrap())
    };
    assert_eq!(run(), run());
    assert!(dir.path().join("a/fig9_runtime.json").exists());
    let csv = std::fs::read_to_string(dir.path().join("a/fig9_work.csv")).unwrap();
    assert!(csv.starts_with("# tool=qassign "));
    assert!(csv.contains("# config_sha256=") && csv.contains("# seed="));
    assert!(csv.contains("\nmethod,j,omega_tau,W_over_gamma\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("mep,")).count(), 3 * 101);
}

#[test]
fn seeded_sampling_figure_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        let res = qassign(dir.path(), &["figure", "10", "--proposals", "200000", "--epsilon", "0.1", "--format", "json", "--out", out]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        std::fs::read(dir.path().join(out).join("fig10_bars.json")).unwrap()
    };
    assert_eq!(run("x"), run("x"));
    let doc: Value = serde_json::from_slice(&run("x")).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 10);
    assert!(doc["meta"]["config_sha256"].as_str().unwrap().len() == 64);
}
