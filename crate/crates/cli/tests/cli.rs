use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use workbench::io::{sha256_hex, RunManifest};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shear-spectra"))
        .args(args)
        .current_dir(dir)
        .env_remove("SHEAR_SPECTRA_CACHE")
        .output()
        .expect("spawn shear-spectra")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    dir.join(name).to_string_lossy().into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_reports_hypothesis_violation() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bad.cfg", "base.name = polynomial\nbase.params.coeffs = 0, 0, 1\n");
    let out = run(&["validate", "--config", &cfg, "--out", "v"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let m = RunManifest::load(&tmp.path().join("v")).unwrap();
    assert_eq!(m.status, "hypothesis_violation");
    assert!(m.verify(&tmp.path().join("v")).unwrap().is_empty());
}

#[test]
fn eigen_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "e.cfg", "m = 2.0\ngamma = 0.1\nN = 512\n");
    for out in ["a", "b"] {
        assert!(run(&["eigen", "--config", &cfg, "--out", out], tmp.path()).status.success());
    }
    let (a, b) = (RunManifest::load(&tmp.path().join("a")).unwrap(), RunManifest::load(&tmp.path().join("b")).unwrap());
    assert_eq!(a.outputs, b.outputs);
}

#[test]
fn threshold_writes_root_and_trace() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "t.cfg", "gamma = 0.1\n");
    assert!(run(&["threshold", "--config", &cfg, "--out", "t"], tmp.path()).status.success());
    let t = json(&tmp.path().join("t/threshold.json"));
    let m = t["m_star"].as_f64().unwrap();
    assert!((m - 3.143798206303672).abs() < 1e-8, "{m}");
    assert!(tmp.path().join("t/trace.csv").exists());
}

#[test]
fn tolerance_flags() {
    let tmp = TempDir::new().unwrap();
    let ok = run(&["eigen", "--out", "a", "--tol.mstar=1e-8", "--tol.c1", "1e-5"], tmp.path());
    assert!(ok.status.success());
    let m = RunManifest::load(&tmp.path().join("a")).unwrap();
    assert_eq!(m.tolerances["mstar"], 1e-8);
    assert_eq!(m.tolerances["c1"], 1e-5);
    let bad = run(&["eigen", "--out", "b", "--tol.bogus=1"], tmp.path());
    assert_eq!(bad.status.code(), Some(2));
    assert!(!tmp.path().join("b").exists());
}

#[test]
fn report_without_runs_fails_cleanly() {
    let tmp = TempDir::new().unwrap();
    std::fs::create_dir(tmp.path().join("empty")).unwrap();
    let out = run(&["report", "empty", "--out", "r"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("r").exists());
}

#[test]
fn disk_cache_reproduces_fresh_results() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "t.cfg", "gamma = 0.2\nN = 1024\n");
    let cache = tmp.path().join("cache").to_string_lossy().into_owned();
    let args = |out: &'static str| ["threshold", "--config", cfg.as_str(), "--out", out, "--cache-dir", cache.as_str()];
    assert!(run(&args("fresh"), tmp.path()).status.success());
    assert!(std::fs::read_dir(tmp.path().join("cache")).unwrap().count() > 0);
    assert!(run(&args("cached"), tmp.path()).status.success());
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("threshold.json")).unwrap();
    assert_eq!(sha256_hex(&read("fresh")), sha256_hex(&read("cached")));
}

#[test]
fn manifest_reruns_the_same_configuration() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "m.cfg", "m = 1.5\ngamma = 0.05\nmfun.count = 8\n");
    assert!(run(&["mfun", "--config", &cfg, "--out", "first"], tmp.path()).status.success());
    let manifest = tmp.path().join("first/manifest.json").to_string_lossy().into_owned();
    assert!(run(&["mfun", "--config", &manifest, "--out", "second"], tmp.path()).status.success());
    let (a, b) = (RunManifest::load(&tmp.path().join("first")).unwrap(), RunManifest::load(&tmp.path().join("second")).unwrap());
    assert_eq!(a.config, b.config);
    assert_eq!(a.outputs, b.outputs);
}

#[test]
fn report_aggregates_threshold_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "t.cfg", "gamma = 0.2\n");
    assert!(run(&["threshold", "--config", &cfg, "--out", "runs/t"], tmp.path()).status.success());
    assert!(run(&["report", "runs", "--out", "r"], tmp.path()).status.success());
    let s = json(&tmp.path().join("r/summary.json"));
    assert_eq!(s["thresholds"].as_array().unwrap().len(), 1);
}
