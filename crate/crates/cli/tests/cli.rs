use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use lentil_cli::{run, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};
use lentil_core::io::audit;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn lentil(args: &[&str]) -> i32 {
    let mut v = vec!["lentil".to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    run(v)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// simulate, disentangle, observables on the 20-source catalog.
fn simulate_20(dir: &Path, grid: &str) -> (PathBuf, PathBuf, PathBuf) {
    let cloud = dir.join("c.csv");
    let funcs = dir.join("f.json");
    let space = dir.join("s.json");
    let disk = fixture("unit_disk.json");
    let src = fixture("disk20_sources.json");
    assert_eq!(
        lentil(&["simulate", "--manifold", s(&disk), "--sources", s(&src), "--grid", grid, "--out", s(&cloud)]),
        EXIT_PASS
    );
    assert_eq!(lentil(&["disentangle", "--cloud", s(&cloud), "--out", s(&funcs)]), EXIT_PASS);
    assert_eq!(lentil(&["observables", "--functions", s(&funcs), "--out", s(&space)]), EXIT_PASS);
    (cloud, funcs, space)
}

#[test]
fn empty_window_simulation_gives_an_empty_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("c.csv");
    let code = lentil(&[
        "simulate",
        "--manifold",
        s(&fixture("unit_disk.json")),
        "--sources",
        s(&fixture("disk20_sources.json")),
        "--grid",
        "64",
        "--t-max",
        "0",
        "--out",
        s(&cloud),
    ]);
    assert_eq!(code, EXIT_PASS);
    let back = lentil_core::io::read_cloud(&cloud).unwrap();
    assert!(back.samples.is_empty());
}

#[test]
fn catalog_pipeline_certifies_a_finite_bound() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _, space) = simulate_20(dir.path(), "256");
    let report = dir.path().join("r.json");
    let disk = fixture("unit_disk.json");
    let code = lentil(&["reconstruct", "--space", s(&space), "--analytic", "--manifold", s(&disk), "--sweep-eps1", "--out", s(&report)]);
    assert_eq!(code, EXIT_PASS);
    let r = json(&report);
    assert_eq!(r["status"], "PASS");
    assert!(r["lgh_bound"].as_f64().unwrap().is_finite());
}

#[test]
fn inversion_never_reads_the_truth_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let disk = fixture("unit_disk.json");
    let cloud = dir.path().join("c.csv");
    lentil(&["simulate", "--manifold", s(&disk), "--sources", s(&fixture("disk20_sources.json")), "--grid", "128", "--out", s(&cloud)]);
    assert!(dir.path().join("c.truth.csv").exists());
    audit::start();
    let funcs = dir.path().join("f.json");
    let space = dir.path().join("s.json");
    assert_eq!(lentil(&["disentangle", "--cloud", s(&cloud), "--out", s(&funcs)]), EXIT_PASS);
    assert_eq!(lentil(&["observables", "--functions", s(&funcs), "--out", s(&space)]), EXIT_PASS);
    let rep = dir.path().join("r.json");
    lentil(&["reconstruct", "--space", s(&space), "--analytic", "--manifold", s(&disk), "--eps1", "0.1", "--out", s(&rep)]);
    let w = dir.path().join("w.json");
    lentil(&["window", "--cloud", s(&cloud), "--analytic", "--manifold", s(&disk), "--t", "0.5,inf", "--out", s(&w)]);
    let log = audit::finish();
    assert!(log.iter().any(|p| p.ends_with("c.csv")));
    assert!(log.iter().all(|p| !p.to_string_lossy().ends_with(".truth.csv")), "{log:?}");
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let disk = fixture("unit_disk.json");
    let poisson = a.path().join("p.json");
    fs::write(&poisson, r#"{"poisson":{"intensity":8.0,"t_max":2.0}}"#).unwrap();
    for d in [a.path(), b.path()] {
        let code = lentil(&[
            "--seed",
            "11",
            "simulate",
            "--manifold",
            s(&disk),
            "--sources",
            s(&poisson),
            "--grid",
            "128",
            "--noise",
            "1e-9",
            "--out",
            s(&d.join("c.csv")),
        ]);
        assert_eq!(code, EXIT_PASS);
        lentil(&["disentangle", "--cloud", s(&d.join("c.csv")), "--out", s(&d.join("f.json"))]);
    }
    for name in ["c.csv", "c.truth.csv", "c.header.json", "f.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn malformed_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, _, _) = simulate_20(dir.path(), "256");
    let header = dir.path().join("c.header.json");
    let mut h = json(&header);
    h["grid_size"] = serde_json::json!(2);
    fs::write(&header, h.to_string()).unwrap();
    let out = dir.path().join("x.json");
    assert_eq!(lentil(&["disentangle", "--cloud", s(&cloud), "--out", s(&out)]), EXIT_ERROR);
    assert!(!out.exists());

    let missing = dir.path().join("nope.csv");
    assert_eq!(lentil(&["disentangle", "--cloud", s(&missing), "--out", s(&out)]), EXIT_ERROR);

    let cfg = dir.path().join("t.toml");
    fs::write(&cfg, "rgrid = 3\n").unwrap();
    assert_eq!(lentil(&["--config", s(&cfg), "disentangle", "--cloud", s(&cloud), "--out", s(&out)]), EXIT_ERROR);
}

#[test]
fn binary_names_the_file_and_field_on_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, _, _) = simulate_20(dir.path(), "256");
    let header = dir.path().join("c.header.json");
    let mut h = json(&header);
    h["boundary_length"] = serde_json::json!(-1.0);
    fs::write(&header, h.to_string()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lentil"))
        .args(["disentangle", "--cloud", s(&cloud), "--out", s(&dir.path().join("f2.json"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_ERROR));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("c.header.json") && err.contains("boundary_length"), "{err}");
}

#[test]
fn empty_first_window_is_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, _, _) = simulate_20(dir.path(), "256");
    let out = dir.path().join("w.json");
    let curve = dir.path().join("w.csv");
    let disk = fixture("unit_disk.json");
    let code = lentil(&["window", "--cloud", s(&cloud), "--analytic", "--manifold", s(&disk), "--t", "0.01,inf", "--out", s(&out), "--curve", s(&curve)]);
    assert!(code == EXIT_PASS || code == EXIT_FAIL);
    let w = json(&out);
    let first = &w.as_array().unwrap()[0];
    assert_eq!(first["one_point"], true, "{first}");
    assert!(curve.exists());
}

#[test]
fn evaluation_against_the_sidecar_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, _, space) = simulate_20(dir.path(), "1024");
    let truth = dir.path().join("c.truth.csv");
    let disk = fixture("unit_disk.json");
    let dist = dir.path().join("ed.json");
    let assoc = dir.path().join("ea.json");
    assert_eq!(
        lentil(&["evaluate", "distances", "--space", s(&space), "--truth", s(&truth), "--manifold", s(&disk), "--out", s(&dist)]),
        EXIT_PASS
    );
    assert_eq!(
        lentil(&["evaluate", "association", "--cloud", s(&cloud), "--truth", s(&truth), "--manifold", s(&disk), "--out", s(&assoc)]),
        EXIT_PASS
    );
}

#[test]
fn lgh_of_a_space_against_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _, space) = simulate_20(dir.path(), "256");
    let disk = fixture("unit_disk.json");
    let labeled = dir.path().join("p.json");
    let report = dir.path().join("r.json");
    lentil(&["reconstruct", "--space", s(&space), "--analytic", "--manifold", s(&disk), "--sweep-eps1", "--out", s(&report), "--labeled", s(&labeled)]);
    let out = dir.path().join("l.json");
    assert_eq!(lentil(&["evaluate", "lgh", "--space", s(&labeled), "--against", s(&labeled), "--out", s(&out)]), EXIT_PASS);
    let l = json(&out);
    assert_eq!(l["lower"].as_f64(), Some(0.0), "{l}");
}

#[test]
fn quick_selftest_runs_a_single_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    assert_eq!(lentil(&["selftest", "--quick", "--criteria", "9", "--out", s(&out)]), EXIT_PASS);
    let o = json(&out);
    assert_eq!(o.as_array().unwrap().len(), 1);
}
