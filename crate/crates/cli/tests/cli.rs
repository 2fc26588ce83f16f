use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pluripot-lab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("PLURIPOT_THREADS", "2")
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

fn with_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn solve_reports_oracle_error_and_dumps_grid() {
    let d = tempfile::tempdir().unwrap();
    let out = lab(d.path(), &["solve", "--resolution", "65"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(d.path());
    assert_eq!(r["experiment"], "solve");
    assert_eq!(check(&r, "oracle")["passed"], true);
    assert!(d.path().join("h.ppgf").exists());
    let csv = std::fs::read_to_string(d.path().join("h.csv")).unwrap();
    assert!(csv.lines().count() > 65 * 65 / 2);
}

#[test]
fn even_or_tiny_resolution_is_a_config_error() {
    for res in ["2", "64"] {
        let d = tempfile::tempdir().unwrap();
        let out = lab(d.path(), &["prop-a", "--resolution", res]);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("resolutions must be odd"));
        assert!(!d.path().join("report.json").exists());
    }
}

#[test]
fn prop_a_passes_at_desk_scale() {
    let d = tempfile::tempdir().unwrap();
    let out = lab(d.path(), &["prop-a", "--resolution", "65"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(d.path());
    assert_eq!(check(&r, "plurithin at 0")["passed"], true);
    let u0 = r["quantities"].as_array().unwrap().iter().find(|q| q["name"] == "u(0)").unwrap();
    assert_eq!(u0["value"], 0.0);
    assert_eq!(u0["scale"], "exact");
}

#[test]
fn prop_a_with_full_space_region_fails() {
    let d = tempfile::tempdir().unwrap();
    let cfg = with_config(d.path(), r#"{"prop_a": {"region": {"type": "constant", "verdict": "certified_in", "dimension": 2}}}"#);
    let out = lab(d.path(), &["prop-a", "--config", &cfg, "--resolution", "33"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("check failed: plurithin at 0"));
    assert_eq!(check(&report(d.path()), "plurithin at 0")["passed"], false);
}

#[test]
fn prop_b_rejects_uncertified_ball() {
    let d = tempfile::tempdir().unwrap();
    let cfg = with_config(d.path(), r#"{"prop_b": {"ball_center": [0.3, 0.1], "ball_radius": 0.0}}"#);
    let out = lab(d.path(), &["prop-b", "--config", &cfg, "--resolution", "33"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not certified"));
}

#[test]
fn prop_b_strict_with_witness() {
    let d = tempfile::tempdir().unwrap();
    let out = lab(d.path(), &["prop-b", "--resolution", "65"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(d.path());
    let env = r["quantities"].as_array().unwrap().iter().find(|q| q["name"] == "envelope").unwrap();
    assert_eq!(env["value"]["strict"], true);
    assert!(env["value"]["witness"].is_array());
}

#[test]
fn dichotomy_whole_domain_is_zero() {
    let d = tempfile::tempdir().unwrap();
    let cfg = with_config(d.path(), r#"{"dichotomy": {"contact": {"type": "domain"}}}"#);
    let out = lab(d.path(), &["dichotomy", "--config", &cfg, "--resolution", "33"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(d.path());
    let v = r["quantities"].as_array().unwrap().iter().find(|q| q["name"] == "verdict").unwrap();
    assert_eq!(v["value"]["verdict"], "identically_zero");
}

#[test]
fn path_with_equal_endpoints_has_one_vertex() {
    let d = tempfile::tempdir().unwrap();
    let cfg = with_config(d.path(), r#"{"path": {"z": [[0.25, 0.0], [0.1, 0.3]], "w": [[0.25, 0.0], [0.1, 0.3]]}}"#);
    let out = lab(d.path(), &["path", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let p: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("path.json")).unwrap()).unwrap();
    assert_eq!(p["vertices"].as_array().unwrap().len(), 1);
}

#[test]
fn blowup_writes_tables() {
    let d = tempfile::tempdir().unwrap();
    let out = lab(d.path(), &["blowup", "--resolution", "65"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let t = std::fs::read_to_string(d.path().join("approach_0.csv")).unwrap();
    assert_eq!(t.lines().next(), Some("offset,modulus"));
    assert_eq!(t.lines().count(), 7);
}

#[test]
fn reruns_are_identical() {
    let run = || {
        let d = tempfile::tempdir().unwrap();
        let out = lab(d.path(), &["envelope", "--resolution", "33", "--terms", "300"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let r = report(d.path());
        (r["quantities"].clone(), std::fs::read(d.path().join("omega.ppgf")).unwrap())
    };
    assert_eq!(run(), run());
}
