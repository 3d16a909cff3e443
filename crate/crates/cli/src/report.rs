//! Aggregate completed runs into one summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::io::{unix_now, Outputs, RunManifest, MANIFEST};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub dir: String,
    pub subcommand: String,
    pub status: String,
    pub outputs: usize,
    pub digests_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub gamma: f64,
    pub m_star: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub gamma: f64,
    pub m: f64,
    pub k: f64,
    /// k·Im c interpolated from the branch.
    pub branch_rate: f64,
    pub evolved_rate: f64,
    pub deviation_pct: f64,
}

/// One acceptance criterion as recorded by the acceptance suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRow {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub measured: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub runs: Vec<RunRow>,
    pub thresholds: Vec<ThresholdRow>,
    pub growth: Vec<GrowthRow>,
    pub acceptance: Vec<AcceptanceRow>,
}

fn has_manifest(d: &Path) -> bool {
    d.join(MANIFEST).is_file()
}

/// Run directories under each argument: the directory itself if it holds a manifest,
/// otherwise its immediate subdirectories that do, in name order.
pub fn discover(dirs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for d in dirs {
        if !d.is_dir() {
            return Err(CliError::config(format!("{} is not a directory", d.display())));
        }
        if has_manifest(d) {
            found.push(d.clone());
            continue;
        }
        let mut subs: Vec<PathBuf> = fs::read_dir(d)
            .map_err(|e| CliError::io(d, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && has_manifest(p))
            .collect();
        subs.sort();
        found.extend(subs);
    }
    Ok(found)
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn num(v: &Value, key: &str) -> Option<f64> {
    v.get(key).and_then(Value::as_f64)
}

struct BranchData {
    gamma: f64,
    lambda: f64,
    /// (m, Im c) including (m_*, 0), sorted by m.
    points: Vec<(f64, f64)>,
}

impl BranchData {
    fn im_c(&self, m: f64) -> Option<f64> {
        let p = &self.points;
        let j = p.windows(2).position(|w| w[0].0 <= m && m <= w[1].0)?;
        let ((m0, c0), (m1, c1)) = (p[j], p[j + 1]);
        Some(c0 + (c1 - c0) * (m - m0) / (m1 - m0))
    }
}

fn load_branch(dir: &Path) -> Result<Option<BranchData>> {
    let v = read_json(&dir.join("branch.json"))?;
    let b = v.get("branch").ok_or_else(|| CliError::config("branch.json without `branch`"))?;
    let (Some(gamma), Some(m_star), Some(lambda)) = (num(b, "gamma"), num(b, "m_star"), num(b, "lambda")) else {
        return Ok(None);
    };
    let mut points = vec![(m_star, 0.0)];
    for s in b.get("samples").and_then(Value::as_array).into_iter().flatten() {
        if let (Some(m), Some(c)) = (num(s, "m"), s.get("c")) {
            // Complex64 serializes as [re, im]
            if let Some(im) = c.get(1).and_then(Value::as_f64) {
                points.push((m, im));
            }
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Some(BranchData { gamma, lambda, points }))
}

/// Collate every run found under `dirs`. Fails without output when no manifest exists.
pub fn aggregate_report(dirs: &[PathBuf]) -> Result<Summary> {
    let found = discover(dirs)?;
    let mut s = Summary::default();
    let mut branches = Vec::new();
    let mut evolves = Vec::new();
    for d in &found {
        let man = RunManifest::load(d)?;
        if man.subcommand == "report" {
            continue;
        }
        let digests_ok = man.verify(d).map(|bad| bad.is_empty()).unwrap_or(false);
        s.runs.push(RunRow {
            dir: d.display().to_string(),
            subcommand: man.subcommand.clone(),
            status: man.status.clone(),
            outputs: man.outputs.len(),
            digests_ok,
        });
        if man.status != "ok" {
            continue;
        }
        match man.subcommand.as_str() {
            "threshold" => {
                let v = read_json(&d.join("threshold.json"))?;
                if let (Some(gamma), Some(m_star), Some(residual)) = (num(&v, "gamma"), num(&v, "m_star"), num(&v, "residual")) {
                    s.thresholds.push(ThresholdRow { gamma, m_star, residual });
                }
            }
            "branch" => branches.extend(load_branch(d)?),
            "evolve" => evolves.push(read_json(&d.join("evolve.json"))?),
            "acceptance" => {
                let rows: Vec<AcceptanceRow> = serde_json::from_value(read_json(&d.join("acceptance.json"))?)?;
                s.acceptance.extend(rows);
            }
            _ => {}
        }
    }
    if s.runs.is_empty() {
        let list: Vec<String> = dirs.iter().map(|d| d.display().to_string()).collect();
        return Err(CliError::config(format!("no run manifests under {}", list.join(", "))));
    }
    for ev in &evolves {
        let (Some(m), Some(gamma)) = (num(ev, "m"), num(ev, "gamma")) else { continue };
        for mode in ev.get("modes").and_then(Value::as_array).into_iter().flatten() {
            let (Some(k), Some(rate)) = (num(mode, "k"), num(mode, "rate")) else { continue };
            for b in &branches {
                let same = (b.gamma - gamma).abs() <= 1e-12 * gamma.abs() && (b.lambda + k * k).abs() <= 1e-12;
                if let Some(im) = b.im_c(m).filter(|_| same) {
                    let pred = k * im;
                    s.growth.push(GrowthRow {
                        gamma,
                        m,
                        k,
                        branch_rate: pred,
                        evolved_rate: rate,
                        deviation_pct: 100.0 * (rate - pred).abs() / pred.abs(),
                    });
                }
            }
        }
    }
    s.thresholds.sort_by(|a, b| b.gamma.total_cmp(&a.gamma));
    s.acceptance.sort_by_key(|r| r.id);
    Ok(s)
}

impl Summary {
    pub fn render(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "runs");
        let _ = writeln!(t, "  {:<12} {:<22} {:>7}  {:<8} dir", "subcommand", "status", "outputs", "digests");
        for r in &self.runs {
            let ok = if r.digests_ok { "ok" } else { "MISMATCH" };
            let _ = writeln!(t, "  {:<12} {:<22} {:>7}  {:<8} {}", r.subcommand, r.status, r.outputs, ok, r.dir);
        }
        if !self.thresholds.is_empty() {
            let _ = writeln!(t, "\nthresholds");
            let _ = writeln!(t, "  {:>10} {:>16} {:>12}", "gamma", "m_star", "residual");
            for r in &self.thresholds {
                let _ = writeln!(t, "  {:>10} {:>16.10} {:>12.3e}", r.gamma, r.m_star, r.residual);
            }
        }
        if !self.growth.is_empty() {
            let _ = writeln!(t, "\ngrowth rates");
            let _ = writeln!(t, "  {:>8} {:>12} {:>5} {:>14} {:>14} {:>10}", "gamma", "m", "k", "k*Im c", "evolved", "dev %");
            for r in &self.growth {
                let _ = writeln!(
                    t,
                    "  {:>8} {:>12.8} {:>5} {:>14.6e} {:>14.6e} {:>10.3}",
                    r.gamma, r.m, r.k, r.branch_rate, r.evolved_rate, r.deviation_pct
                );
            }
        }
        if !self.acceptance.is_empty() {
            let _ = writeln!(t, "\nacceptance");
            for r in &self.acceptance {
                let v = if r.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(t, "  {:>2} {v} {:<28} {}", r.id, r.name, r.measured);
            }
        }
        t
    }
}

/// Aggregate, then write summary.json, summary.txt and a manifest into `out`.
pub fn write_report(dirs: &[PathBuf], out: &Path) -> Result<RunManifest> {
    let started = unix_now();
    let summary = aggregate_report(dirs)?;
    let mut o = Outputs::create(out)?;
    o.json("summary.json", &summary)?;
    o.bytes("summary.txt", summary.render().as_bytes())?;
    let mut config = std::collections::BTreeMap::new();
    for (i, d) in dirs.iter().enumerate() {
        config.insert(format!("report.input.{i}"), d.display().to_string());
    }
    let manifest = RunManifest {
        tool: "shear-spectra".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: "report".into(),
        status: "ok".into(),
        config,
        tolerances: Default::default(),
        workers: 1,
        started_unix: started,
        finished_unix: unix_now(),
        outputs: o.digests().clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    crate::io::write_atomic(&out.join(MANIFEST), text.as_bytes())?;
    Ok(manifest)
}
