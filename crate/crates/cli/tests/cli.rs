use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dwellcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwellcert")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const SEARCH: &str = r#"{"system":{"type":"benchmark","name":"constant_dt","kappa":0,"delta":0},
 "task":{"kind":"search","target":"smallest_constant_dt","range":[0.01,10]}}"#;

const ANALYZE: &str = r#"{"system":{"type":"impulsive","A":[[-1,0],[1,-2]],"E_c":[[0.2,0],[0,0.2]],"J":[[2,1],[1,3]]},
 "task":{"kind":"analyze","dwell":{"constant":1.5}},"options":{"mode":"pwl","N":20}}"#;

#[test]
fn search_reproduces_deterministic_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SEARCH);
    let out = dir.path().join("out");
    let o = dwellcert(&["search", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["verdict"], Value::Bool(true));
    let t = r["result"]["threshold"].as_f64().unwrap();
    assert!((t - 1.1406).abs() <= 5e-4, "threshold {t}");
    assert!(out.join("scan.csv").exists());
    assert!(out.join("metadata.json").exists());
}

#[test]
fn report_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.json", ANALYZE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "2")] {
        let o = dwellcert(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
}

#[test]
fn dimension_mismatch_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = ANALYZE.replace("[[2,1],[1,3]]", "[[2,1,0],[1,3,0]]");
    let cfg = write(dir.path(), "bad.json", &bad);
    let o = dwellcert(&["analyze", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("system.J"));
}

#[test]
fn unknown_field_and_wrong_command_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.json", ANALYZE);
    let o = dwellcert(&["search", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let typo = write(dir.path(), "t.json", &ANALYZE.replace("\"dwell\"", "\"dwel\""));
    let o = dwellcert(&["analyze", "--config", &typo, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("task"));
}

#[test]
fn unstable_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "u.json", &ANALYZE.replace("1.5", "0.5"));
    let out = dir.path().join("o");
    let o = dwellcert(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(&out)["verdict"], Value::Bool(false));
}

#[test]
fn simulate_writes_trajectory_and_moment_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sim.json",
        r#"{"system":{"type":"benchmark","name":"constant_dt","kappa":0.2,"delta":0.2},
 "task":{"kind":"simulate","schedule":{"kind":"constant","t":1.5},"x0":[1,1],"points":10},
 "options":{"paths":200,"horizon":3,"seed":3}}"#,
    );
    let out = dir.path().join("o");
    let o = dwellcert(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(report(&out)["result"]["moment_check"]["max_abs_z"].is_number());
}

#[test]
fn convert_switched_system() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"system":{"type":"switched","modes":[{"G":[[-1,0],[0,-2]],"H":[[0.1,0],[0,0.1]]},{"G":[[-2,1],[0,-1]],"H":[[0,0],[0,0]]}]},
 "task":{"kind":"convert"}}"#,
    );
    let out = dir.path().join("o");
    let o = dwellcert(&["convert", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["multi_jump_impulsive"]["A"].as_array().unwrap().len(), 4);
}

#[test]
fn reproduce_spectral_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = dwellcert(&["reproduce", "t2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["cells"].as_array().unwrap().len(), 25);
    assert!(r["result"]["max_abs_deviation"].as_f64().unwrap() < 5e-3);
}
