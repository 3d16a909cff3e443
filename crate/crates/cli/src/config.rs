//! Flat `key = value` configuration with dotted sections.

use std::collections::BTreeMap;
use std::path::Path;

use shear_spectra::profiles::PertKind;
use shear_spectra::{bifurcation, modes, threshold, BaseProfile, PerturbationProfile, PerturbedFlow};

use crate::error::{CliError, Result};

/// Parsed configuration; keys are kept sorted so serialization is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && !k.starts_with('.')
        && !k.ends_with('.')
        && !k.contains("..")
        && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(CliError::config(format!("line {}: invalid key `{k}`", i + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        if !valid_key(key) || value.contains('\n') {
            return Err(CliError::config(format!("invalid entry `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.get(key).map_or(Ok(default), |v| {
            v.parse().map_err(|_| CliError::config(format!("`{key}` must be a nonnegative integer, got `{v}`")))
        })
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(key, v),
        }
    }

    pub fn base(&self) -> Result<BaseProfile> {
        let name = self.get("base.name").unwrap_or("couette");
        let base = match name {
            "couette" => BaseProfile::couette(),
            "cubic" => BaseProfile::cubic(),
            "sine" => {
                let b = self
                    .f64_opt("base.params.b")?
                    .ok_or_else(|| CliError::config("sine base needs `base.params.b`"))?;
                BaseProfile::sine(b)?
            }
            "polynomial" => {
                let coeffs = self
                    .get("base.params.coeffs")
                    .ok_or_else(|| CliError::config("polynomial base needs `base.params.coeffs`"))?;
                BaseProfile::polynomial(parse_list("base.params.coeffs", coeffs)?)
            }
            "tabulated" => {
                let file = self
                    .get("base.params.file")
                    .ok_or_else(|| CliError::config("tabulated base needs `base.params.file`"))?;
                let (ys, us) = read_table(Path::new(file))?;
                BaseProfile::tabulated(&ys, &us)?
            }
            other => return Err(CliError::config(format!("unknown base profile `{other}`"))),
        };
        let c0 = self.f64_or("base.c0", base.c0)?;
        let ratio = self.f64_or("base.ratio_bound", base.ratio_bound)?;
        let smooth = self.usize_or("base.smoothness", base.smoothness_order as usize)?;
        Ok(base.with_bounds(c0, ratio).with_smoothness(smooth as u32))
    }

    pub fn pert(&self) -> Result<PerturbationProfile> {
        let kind = match self.get("pert.name").unwrap_or("gaussian") {
            "gaussian" => PertKind::Gaussian,
            "sech2" => PertKind::Sech2,
            other => return Err(CliError::config(format!("unknown perturbation profile `{other}`"))),
        };
        Ok(match self.f64_opt("pert.params.scale")? {
            Some(s) => PerturbationProfile::raw(kind, s),
            None => PerturbationProfile::raw(kind, 1.0).normalized(),
        })
    }

    pub fn m(&self) -> Result<f64> {
        self.f64_or("m", 0.0)
    }

    pub fn gamma(&self) -> Result<f64> {
        self.f64_or("gamma", 0.1)
    }

    pub fn grid_n(&self) -> Result<usize> {
        self.usize_or("N", threshold::GRID_N)
    }

    pub fn flow(&self) -> Result<PerturbedFlow> {
        Ok(PerturbedFlow::new(self.base()?, self.pert()?, self.m()?, self.gamma()?)?)
    }

    pub fn tolerances(&self) -> Result<Tolerances> {
        let mut t = Tolerances::default();
        for (k, v) in self.entries.range("tol.".to_string()..) {
            let Some(name) = k.strip_prefix("tol.") else { break };
            t.set(name, parse_f64(k, v)?)?;
        }
        Ok(t)
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::config(format!("`{key}` must be a finite number, got `{v}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let (mut ys, mut us) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if rec.len() != 2 {
            return Err(CliError::config(format!("{}: expected two columns (y, U)", path.display())));
        }
        match (rec[0].trim().parse::<f64>(), rec[1].trim().parse::<f64>()) {
            (Ok(y), Ok(u)) => {
                ys.push(y);
                us.push(u);
            }
            // a non-numeric first row is a header
            _ if ys.is_empty() => continue,
            _ => return Err(CliError::config(format!("{}: non-numeric row", path.display()))),
        }
    }
    Ok((ys, us))
}

/// Per-operation tolerances; `tol.<name>` entries override the module defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    values: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let values = [
            ("mstar", threshold::MSTAR_TOL),
            ("branch_newton", modes::NEWTON_TOL),
            ("eps_scan", modes::ScanOptions::default().eps_scan),
            ("steady_newton", bifurcation::NEWTON_TOL),
            ("c1", bifurcation::C1_TOL),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self { values }
    }
}

impl Tolerances {
    pub fn set(&mut self, name: &str, v: f64) -> Result<()> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::config(format!("tolerance `{name}` must be positive, got {v}")));
        }
        match self.values.get_mut(name) {
            Some(slot) => {
                *slot = v;
                Ok(())
            }
            None => Err(CliError::config(format!(
                "unknown tolerance `{name}` (known: {})",
                self.values.keys().cloned().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn get(&self, name: &str) -> f64 {
        self.values[name]
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }
}
