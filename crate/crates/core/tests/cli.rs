use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qdcluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdcluster")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn summary(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name).join("summary.json")).unwrap()).unwrap()
}

#[test]
fn ising_gate_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let cfg = write(tmp.path(), "g.json", r#"{"name": "gate", "experiment": "verify-gate"}"#);
    let o = qdcluster(&["run", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(tmp.path(), "gate");
    assert!(s["results"]["operator_norm_deviation"].as_f64().unwrap() < 1e-12);
    assert_eq!(s["scenario_hash"].as_str().unwrap().len(), 64);
    assert_eq!(s["parameters"]["gate"]["kind"], "ising");
    let csv = std::fs::read_to_string(tmp.path().join("gate/unitary.csv")).unwrap();
    assert!(csv.starts_with("row,col,re,im\n"));
    assert_eq!(csv.lines().count(), 17);

    // reports are not overwritten without --force
    let again = qdcluster(&["run", &cfg, "--out", out]);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    assert_eq!(qdcluster(&["run", &cfg, "--out", out, "--force"]).status.code(), Some(0));
}

#[test]
fn simultaneous_bare_square_fails_its_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"name": "sq", "experiment": "build-cluster", "lattice": {"kind": "two-species-planar", "rows": 2, "cols": 2}}"#,
    );
    let ok = qdcluster(&["run", &cfg, "--out", out]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let bad = qdcluster(&["run", &cfg, "--out", out, "--set", "schedule=simultaneous", "--set", "name=neg"]);
    assert_eq!(bad.status.code(), Some(1), "{}", String::from_utf8_lossy(&bad.stderr));
    let s = summary(tmp.path(), "neg");
    assert_eq!(s["pass"], false);
    assert!(s["results"]["min_stabilizer"].as_f64().unwrap() < 0.99);
    let rows = std::fs::read_to_string(tmp.path().join("neg/stabilizers.csv")).unwrap();
    assert!(rows.starts_with("lq_index,expectation,pass\n"));
    assert!(rows.contains("false"));
}

#[test]
fn configuration_errors_exit_two_with_a_field_name() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let cases = [
        (r#"{"name": "x", "experiment": "spectrum", "device": {"j_sq": }}"#, "device.j_sq"),
        (r#"{"name": "x", "experiment": "unknown-thing"}"#, "experiment"),
        (r#"{"name": "x", "experiment": "build-cluster", "lattice": {"kind": "sq-planar", "rows": 3, "cols": 3}}"#, "site budget"),
    ];
    for (k, (text, needle)) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("bad{k}.json"), text);
        let o = qdcluster(&["run", &cfg, "--out", out]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{err}");
    }
    let o = qdcluster(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qdcluster(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_flag_reaches_the_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let cfg = write(tmp.path(), "s.json", r#"{"name": "spec", "experiment": "spectrum", "seed": 3}"#);
    assert_eq!(qdcluster(&["run", &cfg, "--out", out, "--seed", "11"]).status.code(), Some(0));
    assert_eq!(summary(tmp.path(), "spec")["parameters"]["seed"], 11);
}

#[test]
fn committed_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for e in std::fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "json") {
            let text = std::fs::read_to_string(&p).unwrap();
            qdcluster::scenario::load_scenario(&text, &[], None).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 3);
}
