use std::process::{Command, Output};

fn ureg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ureg")).args(args).output().expect("ureg runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn flat_plane_is_consistent() {
    let out = ureg(&["check", "--catalog", "euclidean2", "--kmax", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema"], "ureg/check");
    assert_eq!(v["version"], 1);
    assert_eq!(v["result"]["verdict"], "consistent-with-uniformly-regular");
    assert_eq!(v["result"]["k_max"], 3);
}

#[test]
fn unstretched_corner_is_inconsistent_with_witness() {
    let out = ureg(&["check", "--catalog", "corner-unstretched"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["result"]["verdict"], "inconsistent");
    let w = &v["result"]["witness"];
    assert!(w["quantity"].is_string() && w["point"].is_array(), "{w}");
}

#[test]
fn malformed_descriptor_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"bad\"\ndim = 2\nshrink_radius = 0.5\n[[chart]]\nid = 0\nmetric = [\"1 +\", \"1\"]\n").unwrap();
    let out = ureg(&["check", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("chart 0, metric[0]") && err.contains("offset 3"), "{err}");

    std::fs::write(&path, "name = \"bad\"\ndim = 2\nshrink_radius = 0.5\nshrink = 1\n").unwrap();
    let out = ureg(&["validate", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let out = ureg(&["check", "--file", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn descriptor_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("poincare2.toml");
    let out = ureg(&["catalog", "emit", "poincare2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = ureg(&["validate", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn zero_budget_is_inconclusive() {
    let out = ureg(&["check", "--catalog", "sphere2", "--budget", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["result"]["verdict"], "inconclusive");
    let out = ureg(&["injrad", "--catalog", "sphere2", "--budget", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["result"]["budget_exhausted"], true);
}

#[test]
fn injectivity_commands() {
    let out = ureg(&["injrad", "--catalog", "euclidean2", "--cap", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["lower"], 0.5);
    let out = ureg(&["injrad", "--catalog", "sphere2", "--cap", "4"]);
    let lower = json(&out)["result"]["lower"].as_f64().unwrap();
    assert!((lower - std::f64::consts::PI).abs() < 0.05, "{lower}");
}

#[test]
fn lemma_command() {
    let out = ureg(&["lemma", "--catalog", "euclidean2", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["trials"], 0);
    assert!(v["result"]["pass_rate"].is_null());
    let out = ureg(&["lemma", "--catalog", "poincare2", "--trials", "100", "--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("passed       100 (100.0%)"));
}

#[test]
fn geodesic_csv_has_constant_speed() {
    let out = ureg(&["geodesic", "--catalog", "euclidean2", "--point", "0:0,0", "--velocity", "0.6,-0.8", "--time", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,chart,c1,c2,z1,z2,speed"));
    let speeds: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(speeds.len() > 1 && speeds.iter().all(|s| (s - 1.0).abs() < 1e-12));
    let out = ureg(&["geodesic", "--catalog", "euclidean2", "--point", "0:1.5,0", "--velocity", "1,0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors() {
    assert_eq!(ureg(&["check"]).status.code(), Some(1));
    assert_eq!(ureg(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ureg(&["geodesic", "--catalog", "euclidean2"]).status.code(), Some(1));
    assert_eq!(ureg(&["--help"]).status.code(), Some(0));
    assert_eq!(ureg(&["check", "--catalog", "nowhere"]).status.code(), Some(1));
    assert_eq!(ureg(&["check", "--catalog", "euclidean2", "--tol", "0"]).status.code(), Some(1));
    assert_eq!(ureg(&["check", "--catalog", "euclidean2", "--grid-levels", "0"]).status.code(), Some(1));
}

#[test]
fn config_file_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "catalog = \"euclidean1\"\nk_max = 2\ngrid_levels = 2\nformat = \"csv\"\n").unwrap();
    let out = ureg(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("quantity,value,trend,level_0,level_1\n"), "{text}");
    std::fs::write(&cfg, "catalog = \"euclidean1\"\nkmax = 2\n").unwrap();
    assert_eq!(ureg(&["check", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn check_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = ureg(&["check", "--catalog", "funnel-half", "--seed", "5", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn circle_descriptor_file() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/circle3.toml");
    let out = ureg(&["check", "--file", path]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["source"]["file"], path);
    let out = ureg(&["injrad", "--file", path, "--cap", "4"]);
    let v = json(&out);
    let (lower, upper) = (v["result"]["lower"].as_f64().unwrap(), v["result"]["upper"].as_f64().unwrap());
    assert!(lower <= 1.5 && upper >= 1.5 && upper - lower < 0.05, "{lower} {upper}");
}
