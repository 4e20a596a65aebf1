use std::path::Path;
use std::process::{Command, Output};

fn hyperlab(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hyperlab"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("HYPERLAB_THREADS", t),
        None => cmd.env_remove("HYPERLAB_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const MIXED: &str = r#"{
  "schema": 1,
  "surface": {"id": "sphere", "radius": 1.0, "m": 2},
  "tasks": [
    {"kind": "poincare-spaceform", "r": 0},
    {"kind": "poincare-spaceform", "r": 1},
    {"kind": "iso-chain", "r": 0, "region": {"kind": "ball", "center": [0, 0], "radius": 0.7}},
    {"kind": "decay-scan", "r": 1, "weight": "hc", "radii": [1, 2, 4, 8],
     "surface": {"id": "cylinder", "radius": 1.0, "k": 1, "m": 2}}
  ]
}"#;

#[test]
fn catalog_lists_builtins() {
    let out = hyperlab(&["catalog"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["plane", "sphere", "cylinder", "graph", "revolution", "geodesic-sphere"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing:\n{text}");
    }
}

#[test]
fn verify_writes_report_with_equality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", MIXED);
    let out_dir = dir.path().join("out");
    let out = hyperlab(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--quiet"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    let entries = report.as_array().unwrap();
    assert!(entries.iter().all(|e| e["kind"] != "decay-scan"));
    let first = &entries[0];
    assert_eq!(first["schema"], 1);
    assert_eq!(first["inequality_id"], "poincare-sr");
    assert_eq!(first["equality"], true);
    for key in ["lhs", "rhs", "margin", "relative_margin", "flags", "tolerance_achieved"] {
        assert!(first.get(key).is_some(), "{key} missing");
    }
    assert!(!out_dir.join("failures.json").exists());
}

#[test]
fn scan_classifies_cylinder_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", MIXED);
    let out_dir = dir.path().join("out");
    let out = hyperlab(&["scan", "--config", &cfg, "--out", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let report = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(report.contains("\"classification\":\"grows\""));
    let csv = std::fs::read_to_string(out_dir.join("task-003-decay-scan.csv")).unwrap();
    assert!(csv.starts_with("radius,integral,weight,value\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn unknown_surface_exits_nonzero_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"schema": 1, "surface": {"id": "torus", "m": 2}, "tasks": [{"kind": "iso-chain", "r": 0}]}"#,
    );
    let out = hyperlab(&["verify", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("torus"), "{err}");
}

#[test]
fn task_errors_produce_failure_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"schema": 1, "surface": {"id": "plane", "m": 2},
            "tasks": [{"kind": "ball-volume", "center": [0, 0], "radius": 1},
                      {"kind": "iso-chain", "r": 4}]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = hyperlab(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--quiet"], None);
    assert_eq!(out.status.code(), Some(1));
    let report = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(report.contains("ball-volume-general"));
    let manifest = std::fs::read_to_string(out_dir.join("failures.json")).unwrap();
    assert!(manifest.contains("\"task\":1"), "{manifest}");
}

#[test]
fn shoot_prints_radius_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = hyperlab(
        &["soliton", "shoot", "--r", "0", "--alpha", "1", "--delta", "-0.5", "--m", "2", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("radius 2.0000"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("s,x,z,theta,kappa_1,kappa_2,residual\n"));
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", MIXED);
    let run = |threads: &str| {
        let out = hyperlab(&["verify", "--config", &cfg], Some(threads));
        assert!(out.status.success());
        out.stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
    assert_eq!(one, run("1"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = hyperlab(&["catalog"], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = hyperlab(&["selftest", "--out", dir.path().to_str().unwrap()], None);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 10, "{text}");
    assert!(dir.path().join("report.json").exists());
}
