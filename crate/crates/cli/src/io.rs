//! Atomic artifact writes, digests, run manifests and the eigen-solve cache.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shear_spectra::threshold::{min_eigenvalue_n, EigenReport};
use shear_spectra::PerturbedFlow;

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Write through a sibling temporary file and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Shortest round-trip decimal form, so CSV digests depend only on the values.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn csv_bytes<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.as_ref())?;
    }
    w.into_inner().map_err(|e| CliError::config(format!("csv: {e}")))
}

pub fn float_rows<const N: usize>(rows: &[[f64; N]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|&x| fmt_f64(x)).collect()).collect()
}

/// Files produced by one run, written single-threaded in call order.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    digests: BTreeMap<String, String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), digests: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.digests.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.bytes(name, s.as_bytes())
    }

    pub fn csv<R: AsRef<[String]>>(&mut self, name: &str, header: &[&str], rows: &[R]) -> Result<()> {
        let b = csv_bytes(header, rows)?;
        self.bytes(name, &b)
    }

    pub fn digests(&self) -> &BTreeMap<String, String> {
        &self.digests
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// "ok" or the error class that ended the run.
    pub status: String,
    pub config: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, f64>,
    pub workers: usize,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// File name → sha256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join(MANIFEST);
        let text = fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Recompute every recorded digest; returns the mismatching file names.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for (name, digest) in &self.outputs {
            let p = dir.join(name);
            let bytes = fs::read(&p).map_err(|e| CliError::io(&p, e))?;
            if &sha256_hex(&bytes) != digest {
                bad.push(name.clone());
            }
        }
        Ok(bad)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    report: EigenReport,
}

/// Eigen-solves keyed by (base, pert, m, γ, grid_n); memory always, disk when a directory is set.
#[derive(Debug, Default)]
pub struct SweepCache {
    dir: Option<PathBuf>,
    mem: Mutex<HashMap<String, EigenReport>>,
    hits: Mutex<usize>,
}

impl SweepCache {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        }
        Ok(Self { dir, ..Default::default() })
    }

    pub fn key(flow: &PerturbedFlow, grid_n: usize) -> String {
        let base = serde_json::to_string(&flow.base).unwrap_or_default();
        let pert = serde_json::to_string(&flow.pert).unwrap_or_default();
        format!("{base}|{pert}|{:016x}|{:016x}|{grid_n}", flow.m.to_bits(), flow.gamma.to_bits())
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.json", sha256_hex(key.as_bytes()))))
    }

    pub fn hits(&self) -> usize {
        *self.hits.lock().unwrap()
    }

    pub fn eigen(&self, flow: &PerturbedFlow, grid_n: usize) -> shear_spectra::Result<EigenReport> {
        let key = Self::key(flow, grid_n);
        if let Some(r) = self.mem.lock().unwrap().get(&key) {
            *self.hits.lock().unwrap() += 1;
            return Ok(r.clone());
        }
        if let Some(p) = self.path(&key) {
            if let Ok(text) = fs::read_to_string(&p) {
                if let Ok(e) = serde_json::from_str::<CacheEntry>(&text) {
                    if e.key == key {
                        *self.hits.lock().unwrap() += 1;
                        self.mem.lock().unwrap().insert(key, e.report.clone());
                        return Ok(e.report);
                    }
                }
            }
        }
        let report = min_eigenvalue_n(flow, grid_n)?;
        if let Some(p) = self.path(&key) {
            let entry = CacheEntry { key: key.clone(), report };
            let text = serde_json::to_string(&entry).map_err(|e| shear_spectra::Error::Config(e.to_string()))?;
            write_atomic(&p, text.as_bytes()).map_err(|e| shear_spectra::Error::Config(e.to_string()))?;
            self.mem.lock().unwrap().insert(key, entry.report.clone());
            return Ok(entry.report);
        }
        self.mem.lock().unwrap().insert(key, report.clone());
        Ok(report)
    }

    /// Drop every entry, in memory and on disk.
    pub fn clear(&self) -> Result<()> {
        self.mem.lock().unwrap().clear();
        if let Some(d) = &self.dir {
            for e in fs::read_dir(d).map_err(|e| CliError::io(d, e))? {
                let p = e.map_err(|e| CliError::io(d, e))?.path();
                if p.extension().is_some_and(|x| x == "json") {
                    fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
                }
            }
        }
        Ok(())
    }
}
