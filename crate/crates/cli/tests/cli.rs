use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sg"))
        .args(args)
        .output()
        .expect("run sg")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn cf_value(o: &Output) -> f64 {
    let out = stdout(o);
    let line = out.lines().find(|l| l.starts_with("C_f = ")).unwrap();
    line["C_f = ".len()..].trim().parse().unwrap()
}

#[test]
fn cf_known_values() {
    let o = sg(&["cf", "power:1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((cf_value(&o) - std::f64::consts::PI).abs() < 1e-10);
    let o = sg(&["cf", "power:2"]);
    assert!((cf_value(&o) - 2.39628).abs() < 1e-5);
    let o = sg(&["cf", "expinv:1", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn cf_rejects_oscillating_warp() {
    let o = sg(&["cf", "osc:0.5:9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-oscillation condition fails"));
    assert_eq!(sg(&["cf", "nope:1"]).status.code(), Some(2));
}

#[test]
fn trace_cone_exits_at_radius() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = sg(&[
        "trace", "--warp", "power:1", "--radius", "1.5", "--delta", "0.3", "-o", out,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,r,theta,y0,eta0,hamiltonian,clairaut,tau,rho,u"
    );
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((last[1] - 1.5).abs() < 1e-9);
    let meta = read_json(dir.path().join("trajectory.json"));
    assert_eq!(meta["config"]["warp"], "power:1");
    assert_eq!(meta["metadata"]["tolerances"]["rtol"], 1e-10);
    let svg = std::fs::read_to_string(dir.path().join("trajectory.svg")).unwrap();
    assert!(svg.contains("power:1") && svg.contains("delta = 0.3"));
}

#[test]
fn trace_radial_is_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = sg(&[
        "trace",
        "--radial",
        "--delta",
        "0.5",
        "--radius",
        "1",
        "--formats",
        "csv",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        // r(t) = 0.5 + t
        assert!((r[1] - 0.5 - r[0]).abs() < 1e-12);
    }
}

#[test]
fn trace_cusp_reports_winding_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = sg(&[
        "trace",
        "--warp",
        "power:2",
        "--radius",
        "1.5",
        "--delta",
        "0.3",
        "--formats",
        "json",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let meta = read_json(dir.path().join("trajectory.json"));
    let n = meta["metadata"]["winding_count"].as_f64().unwrap();
    assert!(n > 0.5 && n < 0.8, "{n}");
    assert!(stdout(&o).contains("winding count"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"warp": "power:1.0", "radius": 1.5, "delta": 0.1, "formats": ["json"]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = sg(&[
        "trace",
        "-c",
        cfg.to_str().unwrap(),
        "--delta",
        "0.2",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let meta = read_json(out.join("trajectory.json"));
    assert_eq!(meta["config"]["warp"], "power:1");
    assert_eq!(meta["config"]["delta"], 0.2);
    assert!(!out.join("trajectory.csv").exists());

    std::fs::write(&cfg, r#"{"warp": "power:1", "bogus": 1}"#).unwrap();
    assert_eq!(
        sg(&["trace", "-c", cfg.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(sg(&["trace", "--rtol", "-1"]).status.code(), Some(2));
}

#[test]
fn sweep_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = sg(&[
        "sweep",
        "--warp",
        "power:1",
        "--radius",
        "1.5",
        "--deltas",
        "0.3,0.1,0.03,0.01,0.003,0.001",
        "-o",
        d,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rep = read_json(dir.path().join("sweep.json"));
    let errs = rep["result"]["errors_rel"].as_array().unwrap();
    assert!(errs.last().unwrap().as_f64().unwrap() < 1e-3);
    assert!(std::fs::read_to_string(dir.path().join("sweep.csv"))
        .unwrap()
        .starts_with("delta,length,normalized"));
    assert!(std::fs::read_to_string(dir.path().join("sweep.svg"))
        .unwrap()
        .contains("C_f"));

    let o = sg(&["sweep", "--warp", "power:2", "--formats", "json", "-o", d]);
    assert_eq!(o.status.code(), Some(0));
    let rep = read_json(dir.path().join("sweep.json"));
    let l = rep["result"]["extrapolated_limit"].as_f64().unwrap();
    assert!((l - 2.396).abs() < 1e-3);

    let o = sg(&[
        "sweep",
        "--warp",
        "osc:0.5:9",
        "--radius",
        "1",
        "--deltas",
        "0.1,0.03,0.01,0.003",
        "-o",
        d,
    ]);
    assert_eq!(o.status.code(), Some(4));

    let o = sg(&["sweep", "--deltas", "0.1,0.2", "-o", d]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = sg(&[
            "sweep",
            "--warp",
            "power:2",
            "--section",
            "sphere",
            "--radius",
            "1",
            "--deltas",
            "0.3,0.1,0.03",
            "--formats",
            "csv",
            "-o",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("sweep.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn verify_warped_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = sg(&[
        "verify",
        "-c",
        &fixture("warped_suite.json"),
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rep = read_json(dir.path().join("verify.json"));
    assert_eq!(rep["seed"], 3);
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["config"]["rtol"], 1e-11);
    assert!(rep["suites"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["failures"] == 0));
}

#[test]
fn verify_perturbed_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = sg(&[
        "verify",
        "-c",
        &fixture("perturbed_suite.json"),
        "--seed",
        "9",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rep = read_json(dir.path().join("verify.json"));
    assert_eq!(rep["seed"], 9);
}

#[test]
fn verify_corrupted_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = sg(&[
        "verify",
        "-c",
        &fixture("corrupted_tolerance.json"),
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn verify_reports_counterexamples() {
    let dir = tempfile::tempdir().unwrap();
    let o = sg(&[
        "verify",
        "--rtol",
        "1e-4",
        "--atol",
        "1e-6",
        "--deltas",
        "0.2,0.1",
        "--bounds-cases",
        "5",
        "--comparison-cases",
        "0",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("counterexamples"));
    let rep = read_json(dir.path().join("verify.json"));
    assert!(!rep["violations"].as_array().unwrap().is_empty());
}

fn table(o: &Output) -> Vec<Vec<f64>> {
    let out = stdout(o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "r,z,f,f_prime");
    lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn profile2warp_square_profile() {
    let o = sg(&[
        "profile2warp",
        &fixture("profile_z2.csv"),
        "--r-min",
        "1e-3",
        "--points",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = table(&o);
    assert_eq!(rows[0][0], 1e-3);
    assert!((rows[0][2] / (rows[0][0] * rows[0][0]) - 1.0).abs() < 0.01);
    assert!(String::from_utf8_lossy(&o.stderr).contains("convex true"));
}

#[test]
fn profile2warp_linear_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let o = sg(&[
        "profile2warp",
        &fixture("profile_z.csv"),
        "--radius",
        "1.5",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    for l in text.lines().skip(1) {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[2] / (v[0] / 2f64.sqrt()) - 1.0).abs() < 1e-10, "{l}");
    }
}

#[test]
fn profile2warp_rejects_non_monotone() {
    let o = sg(&["profile2warp", &fixture("profile_nonmonotone.csv")]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        sg(&["profile2warp", "/nonexistent.csv"]).status.code(),
        Some(2)
    );
}
