use serde_json::json;

use super::*;

fn minimal(experiment: &str) -> String {
    format!(r#"{{"name": "t", "experiment": "{experiment}"}}"#)
}

#[test]
fn overrides_walk_and_create_paths() {
    let mut v = json!({"device": {"j_sq": 4.0}, "spectrum": {"couplings": [1.0, 2.0]}});
    apply_override(&mut v, "device.j_sq=2.5").unwrap();
    apply_override(&mut v, "lattice.kind=sq-planar").unwrap();
    apply_override(&mut v, "spectrum.couplings.1=3").unwrap();
    apply_override(&mut v, "build.threshold=null").unwrap();
    assert_eq!(v["device"]["j_sq"], json!(2.5));
    assert_eq!(v["lattice"]["kind"], json!("sq-planar"));
    assert_eq!(v["spectrum"]["couplings"], json!([1.0, 3]));
    assert!(v["build"]["threshold"].is_null());
    for bad in ["noequals", "a..b=1", "=1", "spectrum.couplings.7=1", "spectrum.couplings.x=1", "device.j_sq.deeper=1"] {
        assert!(matches!(apply_override(&mut v, bad), Err(RunError::Config(_))), "{bad}");
    }
}

#[test]
fn sections_are_filled_for_the_named_experiment() {
    let s = load_scenario(&minimal("spectrum"), &[], None).unwrap();
    assert_eq!(s.spectrum, Some(SpectrumSection::default()));
    assert!(s.gate.is_none());
    let s = load_scenario(&minimal("error-sweep"), &[], Some(9)).unwrap();
    assert_eq!(s.seed, 9);
    assert_eq!(s.error, Some(ErrorSection::full()));
}

#[test]
fn configuration_errors_exit_two() {
    let cases = [
        ("{\"name\": ", "malformed"),
        (r#"{"name": "t", "experiment": "nope"}"#, "experiment"),
        (r#"{"name": "t", "experiment": "spectrum", "colour": 1}"#, "colour"),
        (r#"{"name": "t", "experiment": "spectrum", "device": {"j_sq": "big"}}"#, "device.j_sq"),
        (r#"{"name": "t", "experiment": "build-cluster"}"#, "lattice"),
        (r#"{"name": "", "experiment": "spectrum"}"#, "name"),
        (
            r#"{"name": "t", "experiment": "mbqc-rotation", "lattice": {"kind": "two-species-planar", "rows": 2, "cols": 2}}"#,
            "1×5",
        ),
    ];
    for (text, needle) in cases {
        let e = load_scenario(text, &[], None).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        assert!(e.to_string().contains(needle), "{e}");
    }
    let big = r#"{"name": "t", "experiment": "build-cluster", "lattice": {"kind": "sq-planar", "rows": 2, "cols": 3}}"#;
    let e = load_scenario(big, &[], None).unwrap_err();
    assert!(matches!(e, RunError::SiteBudget(_)), "{e}");
    assert_eq!(e.exit_code(), EXIT_CONFIG);
}

#[test]
fn simulation_errors_map_to_exit_codes() {
    let cfg = RunError::from(crate::Error::SiteBudget { requested: 30, cap: 22 });
    assert_eq!(cfg.exit_code(), EXIT_CONFIG);
    let fail = RunError::from(crate::Error::Leakage { leakage: 0.6, limit: 0.5 });
    assert_eq!(fail.exit_code(), EXIT_CHECK_FAILED);
}

#[test]
fn checks_compare_as_labelled() {
    assert!(Check::below("a", 1e-13, 1e-12).pass);
    assert!(!Check::below("a", f64::NAN, 1e-12).pass);
    assert!(!Check::above("r2", f64::NAN, 0.999).pass);
    assert!(Check::at_least("k", 0.5, 0.5).pass);
    assert_eq!(Check::flag("f", false).value, 0.0);
}

#[test]
fn hash_tracks_resolved_parameters() {
    let a = load_scenario(&minimal("verify-gate"), &[], None).unwrap();
    let explicit = r#"{"name": "t", "experiment": "verify-gate", "gate": {"kind": "ising"}, "seed": 0}"#;
    let b = load_scenario(explicit, &[], None).unwrap();
    let c = load_scenario(&minimal("verify-gate"), &[], Some(1)).unwrap();
    let h = |s: &Scenario| scenario_hash(&serde_json::to_value(s).unwrap());
    assert_eq!(h(&a), h(&b));
    assert_ne!(h(&a), h(&c));
    assert_eq!(h(&a).len(), 64);
}

#[test]
fn summaries_differ_only_in_the_timestamp() {
    let s = load_scenario(&minimal("spectrum"), &[], None).unwrap();
    let (one, _) = execute(&s).unwrap();
    let (two, _) = execute(&s).unwrap();
    assert!(one.get(TIMESTAMP_KEY).is_some());
    assert_eq!(without_timestamp(&one), without_timestamp(&two));
    assert_eq!(one["pass"], json!(true));
}
