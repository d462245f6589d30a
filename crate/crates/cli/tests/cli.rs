use std::path::Path;
use std::process::{Command, Output};

use knnfunc::{Density, Family};

fn knnfunc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knnfunc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_sample(path: &Path, family: &str, d: usize, m: usize, seed: u64) {
    let f: Family = family.parse().unwrap();
    Density::new(f, d).unwrap().sample(m, seed).unwrap().write_csv(path).unwrap();
}

#[test]
fn estimate_entropy_json() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    write_sample(&x, "uniform:1", 2, 2000, 1);
    let o = knnfunc(&["estimate", "--input", x.to_str().unwrap(), "--functional", "entropy", "--k", "3", "--no-truncation", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["m"], 2000);
    assert_eq!(doc["in_window"], 2000);
    assert!(doc["value"].as_f64().unwrap().abs() < 0.1);
}

#[test]
fn estimate_divergence_needs_second_input() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    let y = dir.path().join("y.csv");
    write_sample(&x, "tgauss:3", 2, 500, 1);
    write_sample(&y, "tgauss:3", 2, 500, 2);
    let xs = x.to_str().unwrap();
    let o = knnfunc(&["estimate", "--input", xs, "--functional", "kl", "--k", "3", "--l", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = knnfunc(&[
        "estimate", "--input", xs, "--input2", y.to_str().unwrap(), "--functional", "kl", "--k", "3", "--l", "3", "--sigma", "2",
        "--tau", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("kl = "));
}

#[test]
fn sweep_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out.csv");
    let json_out = dir.path().join("report.json");
    let text = format!(
        r#"{{"spec": "entropy", "densities": ["uniform:1"], "d": 2, "k": 3, "sample_sizes": [100, 200, 400], "runs": 4, "seed": 9, "output": {:?}}}"#,
        json_out.to_str().unwrap()
    );
    std::fs::write(&cfg, text).unwrap();
    let o = knnfunc(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("m,mse,bias2,var,stderr"));
    assert_eq!(csv.lines().count(), 4);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(report["config"]["runs"], 4);
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);

    // Same config, same bytes.
    let out2 = dir.path().join("out2.csv");
    let o = knnfunc(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out2.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn rates_prints_exponents_and_flags() {
    let o = knnfunc(&["rates", "--functional", "renyi-entropy:3", "--sigma", "2", "--d", "3", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2), "k = 1 violates k > alpha - 1");
    let o = knnfunc(&["rates", "--functional", "renyi-entropy:3", "--sigma", "2", "--d", "3", "--k", "4"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("mse exponent: 0.4444444444444444"), "{s}");
    let o = knnfunc(&["rates", "--functional", "kl", "--sigma", "2", "--d", "2", "--k", "1", "--tau", "2", "--l", "1"]);
    assert!(stdout(&o).contains("flags: none"));
}

#[test]
fn validate_suites() {
    for suite in ["inc-gamma", "knn-equiv"] {
        let o = knnfunc(&["validate", "--suite", suite]);
        assert!(o.status.success(), "{suite}: {}", stdout(&o));
        assert!(stdout(&o).contains(&format!("{suite} PASS")));
    }
    assert!(!knnfunc(&["validate", "--suite", "nope"]).status.success());
}

#[test]
fn bad_input_reports_path() {
    let o = knnfunc(&["estimate", "--input", "/nonexistent/x.csv", "--functional", "entropy", "--k", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/x.csv"));
}
