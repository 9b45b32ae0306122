use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn assc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_assc")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn synth_toy_writes_ten_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy.csv");
    let o = assc(&["synth", "--toy", "two-lines-r3", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,x3,label");
    assert_eq!(lines.len(), 11);
}

#[test]
fn synth_random_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = assc(&["synth", "--dims", "1,2", "--ambient", "4", "--seed", "7", "--out", path(p)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn bad_toy_id_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = assc(&["synth", "--toy", "no-such-toy", "--out", path(&dir.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = assc(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_two_lines_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    for toy in ["two-lines-r3", "two-lines-r2"] {
        let report = dir.path().join(format!("{toy}.json"));
        let coef = dir.path().join(format!("{toy}-c.csv"));
        let o = assc(&["solve", "--toy", toy, "--report", path(&report), "--out-coefficients", path(&coef)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let r = json_file(&report);
        assert_eq!(r["clustering_error"].as_f64(), Some(0.0), "{toy}");
        assert!(coef.exists());
    }
}

#[test]
fn noisy_without_alpha_or_lambda_is_rejected() {
    let o = assc(&["solve", "--toy", "two-lines-r3", "--noisy"]);
    assert_eq!(o.status.code(), Some(1));
    let o = assc(&["solve", "--toy", "two-lines-r3", "--noisy", "--alpha", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn certify_reports_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("cert.json");
    let o = assc(&["certify", "--toy", "two-lines-r3", "--report", path(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json_file(&report);
    assert_eq!(r["arrangement"]["affinely_independent"], Value::Bool(true));
    assert!(r["points"].as_array().unwrap().iter().all(|p| p["subspace_preserving"] == Value::Bool(true)));
    assert_eq!(r["correct_clustering"], Value::Bool(true));
}

#[test]
fn certify_triangle_line_face_points() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("t.csv");
    let coef = dir.path().join("c.csv");
    let report = dir.path().join("cert.json");
    assert!(assc(&["synth", "--toy", "triangle-line-r3", "--out", path(&data)]).status.success());
    let o = assc(&["solve", "--data", path(&data), "--out-coefficients", path(&coef), "--report", path(&dir.path().join("r.json"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = assc(&["certify", "--data", path(&data), "--coefficients", path(&coef), "--report", path(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json_file(&report);
    let pts = r["points"].as_array().unwrap();
    for j in [1usize, 3, 4] {
        assert_eq!(pts[j]["subspace_preserving"], Value::Bool(true), "x{}", j + 1);
        assert_eq!(pts[j]["class"]["kind"], Value::String("BoundaryFace".into()));
    }
    assert!(r["theory_violations"].as_array().unwrap().is_empty());
}

#[test]
fn certify_unlabelled_csv_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("u.csv");
    std::fs::write(&data, "x1,x2\n0,1\n1,1\n2,1\n").unwrap();
    let o = assc(&["certify", "--data", path(&data)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_a_data_error() {
    let o = assc(&["solve", "--data", "/nonexistent/data.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_round_trip_and_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let run = || {
        let o = assc(&["solve", "--toy", "two-lines-r2", "--certify", "--report", path(&a)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        json_file(&a)
    };
    let mut ra = run();
    let mut rb = run();
    ra.as_object_mut().unwrap().remove("wall_times");
    rb.as_object_mut().unwrap().remove("wall_times");
    assert_eq!(ra, rb);
    // Re-serializing a parsed report gives the same document.
    let text = std::fs::read_to_string(&a).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&serde_json::to_string(&v).unwrap()).unwrap(), v);
}

#[test]
fn config_file_drives_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let report = dir.path().join("r.json");
    let affinity = dir.path().join("a.csv");
    let body = serde_json::json!({
        "source": {"toy": "two-lines-r3"},
        "solver": {"mode": "Assc", "variant": "exact"},
        "clusters": {"count": 2},
        "outputs": {"affinity": affinity, "report": report},
        "seed": 3
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let o = assc(&["solve", "--config", path(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_file(&report)["clustering_error"].as_f64(), Some(0.0));
    assert!(affinity.exists());
}

#[test]
fn eval_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = assc(&["eval", "--toy", "two-lines-r3"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["clustering_error"].as_f64(), Some(0.0));

    let labels = dir.path().join("pred.csv");
    std::fs::write(&labels, "label\n2\n2\n2\n2\n2\n1\n1\n1\n1\n1\n").unwrap();
    let o = assc(&["eval", "--toy", "two-lines-r3", "--predicted", path(&labels)]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["clustering_error"].as_f64(), Some(0.0));

    let o = assc(&["sweep", "--toy", "two-lines-r3", "--alphas", "5,50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("alpha,lambda,clustering_error"));
}

#[test]
fn thread_cap_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_assc"))
        .args(["eval", "--toy", "two-lines-r3"])
        .env("ASSC_NUM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_assc"))
        .args(["eval", "--toy", "two-lines-r3"])
        .env("ASSC_NUM_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
}
