//! Subcommand dispatch.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use shear_spectra::bifurcation::{self, build_vorticity_map, ChebGrid, Construction, SteadyOptions};
use shear_spectra::evolution::{self, ModeGrid};
use shear_spectra::modes::{self, BranchOptions, ScanOptions};
use shear_spectra::profiles::{self, ValidationReport};
use shear_spectra::threshold::{self, ThresholdResult};
use shear_spectra::PerturbedFlow;

use crate::config::{Config, Tolerances};
use crate::error::{CliError, Result};
use crate::io::{float_rows, fmt_f64, unix_now, Outputs, RunManifest, SweepCache, MANIFEST};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Eigen,
    Threshold,
    Mfun,
    Branch,
    Scan,
    Bifurcate,
    Evolve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Eigen => "eigen",
            Command::Threshold => "threshold",
            Command::Mfun => "mfun",
            Command::Branch => "branch",
            Command::Scan => "scan",
            Command::Bifurcate => "bifurcate",
            Command::Evolve => "evolve",
        }
    }
}

/// Everything a run needs besides the subcommand.
pub struct RunContext<'a> {
    pub config: Config,
    pub out: &'a Path,
    pub workers: usize,
    pub cache: &'a SweepCache,
}

/// Execute one subcommand, write its artifacts and manifest.json, and return the manifest.
///
/// A hypothesis or convergence failure detected after artifacts were produced still writes
/// the manifest (status names the failure) before the error is returned.
pub fn run(cmd: Command, ctx: &RunContext) -> Result<RunManifest> {
    let started = unix_now();
    let tol = ctx.config.tolerances()?;
    let mut out = Outputs::create(ctx.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers.max(1))
        .build()
        .map_err(|e| CliError::config(format!("worker pool: {e}")))?;
    let verdict = pool.install(|| dispatch(cmd, &ctx.config, &tol, ctx.cache, &mut out))?;
    let status = match &verdict {
        None => "ok".to_string(),
        Some(CliError::Hypothesis(_)) => "hypothesis_violation".to_string(),
        Some(CliError::NonConvergence(_)) => "non_convergence".to_string(),
        Some(_) => "error".to_string(),
    };
    let manifest = RunManifest {
        tool: "shear-spectra".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: cmd.name().into(),
        status,
        config: ctx.config.entries().clone(),
        tolerances: tol.values().clone(),
        workers: ctx.workers.max(1),
        started_unix: started,
        finished_unix: unix_now(),
        outputs: out.digests().clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    crate::io::write_atomic(&ctx.out.join(MANIFEST), text.as_bytes())?;
    match verdict {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

type Verdict = Option<CliError>;

fn dispatch(cmd: Command, cfg: &Config, tol: &Tolerances, cache: &SweepCache, out: &mut Outputs) -> Result<Verdict> {
    match cmd {
        Command::Validate => validate(cfg, out),
        Command::Eigen => eigen(cfg, cache, out),
        Command::Threshold => threshold_cmd(cfg, tol, cache, out),
        Command::Mfun => mfun(cfg, out),
        Command::Branch => branch(cfg, tol, cache, out),
        Command::Scan => scan(cfg, tol, out),
        Command::Bifurcate => bifurcate(cfg, tol, out),
        Command::Evolve => evolve(cfg, out),
    }
}

#[derive(Serialize)]
struct ValidationRecord<'a> {
    base: &'a str,
    pert: &'a str,
    m: f64,
    gamma: f64,
    passed: bool,
    failures: Vec<&'a str>,
    report: &'a ValidationReport,
}

fn validate(cfg: &Config, out: &mut Outputs) -> Result<Verdict> {
    let (base, pert, m, gamma) = (cfg.base()?, cfg.pert()?, cfg.m()?, cfg.gamma()?);
    let report = profiles::validate(&base, &pert, m, gamma);
    let failures: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
    let passed = failures.is_empty();
    let verdict = (!passed).then(|| CliError::Hypothesis(format!("failed checks: {}", failures.join(", "))));
    out.json(
        "validation.json",
        &ValidationRecord { base: &base.name, pert: &pert.name, m, gamma, passed, failures, report: &report },
    )?;
    Ok(verdict)
}

#[derive(Serialize)]
struct EigenRecord<'a> {
    base: &'a str,
    pert: &'a str,
    m: f64,
    gamma: f64,
    grid_n: usize,
    lambda_min: f64,
    lambda_coarse: f64,
    lambda_fine: f64,
    residual: f64,
}

fn eigen(cfg: &Config, cache: &SweepCache, out: &mut Outputs) -> Result<Verdict> {
    let flow = cfg.flow()?;
    let n = cfg.grid_n()?;
    let r = cache.eigen(&flow, n)?;
    out.json(
        "eigen.json",
        &EigenRecord {
            base: &flow.base.name,
            pert: &flow.pert.name,
            m: flow.m,
            gamma: flow.gamma,
            grid_n: n,
            lambda_min: r.lambda_min,
            lambda_coarse: r.lambda_coarse,
            lambda_fine: r.lambda_fine,
            residual: r.residual,
        },
    )?;
    let rows: Vec<[f64; 2]> = r.grid.iter().zip(&r.eigenfunction).map(|(&y, &v)| [y, v]).collect();
    out.csv("eigenfunction.csv", &["y", "phi"], &float_rows(&rows))?;
    Ok(None)
}

fn mstar(cfg: &Config, tol: &Tolerances, cache: &SweepCache) -> Result<ThresholdResult> {
    let n = cfg.grid_n()?;
    let r = threshold::find_mstar_with(&cfg.base()?, &cfg.pert()?, cfg.gamma()?, &|f| Ok(cache.eigen(f, n)?.lambda_min))?;
    if r.residual > tol.get("mstar") {
        return Err(CliError::NonConvergence(format!(
            "|λ + 1| = {:e} at m_* exceeds tol.mstar = {:e}",
            r.residual,
            tol.get("mstar")
        )));
    }
    Ok(r)
}

fn threshold_cmd(cfg: &Config, tol: &Tolerances, cache: &SweepCache, out: &mut Outputs) -> Result<Verdict> {
    let r = mstar(cfg, tol, cache)?;
    out.json("threshold.json", &r)?;
    let rows: Vec<[f64; 2]> = r.trace.iter().map(|&(m, l)| [m, l]).collect();
    out.csv("trace.csv", &["m", "lambda"], &float_rows(&rows))?;
    Ok(None)
}

fn mfun(cfg: &Config, out: &mut Outputs) -> Result<Verdict> {
    let base = cfg.base()?;
    let lambdas = match cfg.get("mfun.lambdas") {
        Some(_) => cfg.list_or("mfun.lambdas", &[])?,
        None => {
            let lo = cfg.f64_or("mfun.lambda_min", -10.0)?;
            let hi = cfg.f64_or("mfun.lambda_max", -0.05)?;
            let n = cfg.usize_or("mfun.count", 50)?.max(2);
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    };
    let rows: Result<Vec<[f64; 3]>> = lambdas
        .par_iter()
        .map(|&l| {
            Ok([l, threshold::threshold_function_m(&base, l)?, threshold::threshold_map_jump(&base, l)?])
        })
        .collect();
    out.csv("mfun.csv", &["lambda", "m_printed", "m_jump"], &float_rows(&rows?))?;
    Ok(None)
}

fn flow_family(cfg: &Config) -> Result<impl Fn(f64) -> shear_spectra::Result<PerturbedFlow>> {
    let (base, pert, gamma) = (cfg.base()?, cfg.pert()?, cfg.gamma()?);
    Ok(move |m: f64| PerturbedFlow::new(base.clone(), pert.clone(), m, gamma))
}

fn m_star_of(cfg: &Config, tol: &Tolerances, cache: &SweepCache) -> Result<f64> {
    match cfg.f64_opt("m_star")? {
        Some(m) => Ok(m),
        None => Ok(mstar(cfg, tol, cache)?.m_star),
    }
}

#[derive(Serialize)]
struct BranchRecord<'a> {
    ratio_constant: f64,
    branch: &'a modes::ModeBranch,
}

fn branch(cfg: &Config, tol: &Tolerances, cache: &SweepCache, out: &mut Outputs) -> Result<Verdict> {
    let m_star = m_star_of(cfg, tol, cache)?;
    let opts = BranchOptions {
        lambda: cfg.f64_or("branch.lambda", -1.0)?,
        probes: cfg.get("branch.probes").is_some_and(|v| v == "true"),
        tol: tol.get("branch_newton"),
    };
    let targets: Vec<f64> = match cfg.get("branch.m_factors") {
        Some(_) => cfg.list_or("branch.m_factors", &[])?.iter().map(|f| m_star * (1.0 + f)).collect(),
        None => {
            let m_max = cfg.f64_or("branch.m_max", 1.1 * m_star)?;
            let steps = cfg.usize_or("branch.steps", 10)?.max(1);
            (1..=steps).map(|j| m_star + (m_max - m_star) * j as f64 / steps as f64).collect()
        }
    };
    let family = flow_family(cfg)?;
    let b = modes::continue_branch_to(&family, m_star, &targets, opts)?;
    out.csv("branch.csv", &["m", "re_c", "im_c", "residual", "ratio"], &float_rows(&b.rows()))?;
    out.json("branch.json", &BranchRecord { ratio_constant: b.ratio_constant(), branch: &b })?;
    Ok(None)
}

#[derive(Serialize)]
struct ScanRecord<'a> {
    m: f64,
    gamma: f64,
    total: i64,
    integrality_defect: f64,
    scan: &'a modes::ZeroCount,
}

fn scan(cfg: &Config, tol: &Tolerances, out: &mut Outputs) -> Result<Verdict> {
    let flow = cfg.flow()?;
    let lambdas = cfg.list_or("scan.lambdas", &[-1.0, -4.0, -9.0])?;
    let d = ScanOptions::default();
    let opts = ScanOptions {
        eps_scan: tol.get("eps_scan"),
        columns: cfg.usize_or("scan.columns", d.columns)?.max(1),
        rows: cfg.usize_or("scan.rows", d.rows)?.max(1),
        real_axis_samples: cfg.usize_or("scan.real_axis_samples", d.real_axis_samples)?.max(1),
    };
    let z = modes::stability_scan(&flow, &lambdas, opts)?;
    let rows: Vec<Vec<String>> = z
        .scans
        .iter()
        .flat_map(|s| {
            s.tiles.iter().map(move |t| {
                let mut r: Vec<String> =
                    [s.lambda, t.re.0, t.re.1, t.im.0, t.im.1, t.winding].iter().map(|&x| fmt_f64(x)).collect();
                r.push(t.count.to_string());
                r.push(fmt_f64(t.min_abs_w));
                r
            })
        })
        .collect();
    out.csv("scan_tiles.csv", &["lambda", "re_lo", "re_hi", "im_lo", "im_hi", "winding", "count", "min_abs_w"], &rows)?;
    out.json(
        "scan.json",
        &ScanRecord { m: flow.m, gamma: flow.gamma, total: z.total(), integrality_defect: z.integrality_defect(), scan: &z },
    )?;
    Ok(None)
}

#[derive(Serialize)]
struct SteadySidecar {
    eps: f64,
    k_sq: f64,
    period: f64,
    newton_residual: f64,
    iterations: usize,
    linear_deviation: f64,
    h2_deviation: f64,
    hs_deviation: f64,
    hs_index: f64,
    j1_fraction: f64,
    substitution_defect: f64,
    interior_defect: f64,
    file: String,
}

#[derive(Serialize)]
struct BifurcationRecord {
    m: f64,
    gamma: f64,
    construction: Construction,
    c1_mismatch: f64,
    k0_sq: f64,
    lambda_collocation: f64,
    kernel_residual: f64,
    transversality: f64,
    k_sq_slope: f64,
    h2_spread: f64,
    hs_spread: f64,
    states: Vec<SteadySidecar>,
}

fn bifurcate(cfg: &Config, tol: &Tolerances, out: &mut Outputs) -> Result<Verdict> {
    let flow = cfg.flow()?;
    let construction = match cfg.get("bifurcate.construction").unwrap_or("plain") {
        "plain" => Construction::Plain,
        "signed" => Construction::Signed,
        o => return Err(CliError::config(format!("unknown construction `{o}`"))),
    };
    let map = build_vorticity_map(&flow, construction, bifurcation::MAP_SAMPLES)?;
    if map.c1_mismatch() > tol.get("c1") {
        return Err(CliError::Hypothesis(format!(
            "vorticity map is not C¹ at ψ = 0 (mismatch {:e} > tol.c1 = {:e})",
            map.c1_mismatch(),
            tol.get("c1")
        )));
    }
    let grid = ChebGrid::new(cfg.usize_or("bifurcate.n", 256)?);
    let d = SteadyOptions::default();
    let opts = SteadyOptions {
        modes: cfg.usize_or("bifurcate.modes", d.modes)?,
        tol: tol.get("steady_newton"),
        ..d
    };
    let eps = cfg.list_or("bifurcate.eps", &[1e-3, 1e-4])?;
    let sweep = bifurcation::branch_sweep(&flow, &map, &grid, &eps, opts)?;
    let nz = cfg.usize_or("bifurcate.zeta_points", 32)?.max(1);
    let mut states = Vec::new();
    for (i, s) in sweep.states.iter().enumerate() {
        let file = format!("steady_{i}.csv");
        let rows: Vec<[f64; 3]> = s.psi_grid(nz).into_iter().map(|(z, y, v)| [z, y, v]).collect();
        out.csv(&file, &["zeta", "y", "psi_per"], &float_rows(&rows))?;
        states.push(SteadySidecar {
            eps: s.eps,
            k_sq: s.k_sq,
            period: s.period(),
            newton_residual: s.newton_residual,
            iterations: s.iterations,
            linear_deviation: s.linear_deviation,
            h2_deviation: s.h2_deviation,
            hs_deviation: s.hs_deviation,
            hs_index: s.hs_index,
            j1_fraction: s.j1_fraction,
            substitution_defect: s.substitution_defect,
            interior_defect: s.interior_defect,
            file,
        });
    }
    let k = &sweep.kernel;
    let rows: Vec<[f64; 2]> = k.y.iter().zip(&k.phi0).map(|(&y, &p)| [y, p]).collect();
    out.csv("kernel.csv", &["y", "phi0"], &float_rows(&rows))?;
    out.json(
        "steady.json",
        &BifurcationRecord {
            m: flow.m,
            gamma: flow.gamma,
            construction,
            c1_mismatch: map.c1_mismatch(),
            k0_sq: k.k0_sq,
            lambda_collocation: k.lambda_collocation,
            kernel_residual: k.residual_2d,
            transversality: k.transversality,
            k_sq_slope: sweep.k_sq_slope,
            h2_spread: sweep.h2_spread,
            hs_spread: sweep.hs_spread,
            states,
        },
    )?;
    Ok(None)
}

#[derive(Serialize)]
struct EvolveRecord {
    k: f64,
    dt: f64,
    t_end: f64,
    init: String,
    rate: Option<f64>,
    final_energy: f64,
    max_poisson_residual: f64,
    file: String,
}

#[derive(Serialize)]
struct EvolveSummary {
    m: f64,
    gamma: f64,
    modes: Vec<EvolveRecord>,
}

fn evolve(cfg: &Config, out: &mut Outputs) -> Result<Verdict> {
    let flow = cfg.flow()?;
    let ks = cfg.list_or("evolve.k", &[1.0])?;
    let n = cfg.usize_or("evolve.n", evolution::EVOLUTION_GRID)?;
    let t_end = cfg.f64_or("evolve.t_end", 50.0)?;
    let stride = cfg.usize_or("evolve.stride", 20)?.max(1);
    let dt_cfg = cfg.f64_opt("evolve.dt")?;
    let shift = match (cfg.f64_opt("evolve.shift_re")?, cfg.f64_opt("evolve.shift_im")?) {
        (None, None) => None,
        (r, i) => Some(Complex64::new(r.unwrap_or(0.0), i.unwrap_or(0.0))),
    };
    let runs: Result<Vec<(evolution::EvolutionSeries, String)>> = ks
        .par_iter()
        .map(|&k| {
            let grid = ModeGrid::new(&flow, k, n)?;
            let dt = dt_cfg.unwrap_or_else(|| grid.default_dt());
            let (omega0, init) = match shift {
                Some(s) => (evolution::discrete_mode(&grid, s, 12)?.omega, "eigen".to_string()),
                None => (evolution::smooth_initial(&grid), "smooth".to_string()),
            };
            Ok((evolution::evolve_on(&grid, &omega0, t_end, dt, stride)?, init))
        })
        .collect();
    let mut modes_out = Vec::new();
    for (series, init) in runs? {
        let file = format!("evolve_k{}.csv", series.k);
        out.csv(&file, &["t", "energy", "stream_norm", "fitted_rate_so_far"], &float_rows(&series.rows()))?;
        modes_out.push(EvolveRecord {
            k: series.k,
            dt: series.dt,
            t_end,
            init,
            rate: evolution::growth_rate(&series.samples, evolution::RATE_WINDOW).ok(),
            final_energy: series.final_state.energy,
            max_poisson_residual: series.max_poisson_residual,
            file,
        });
    }
    out.json("evolve.json", &EvolveSummary { m: flow.m, gamma: flow.gamma, modes: modes_out })?;
    Ok(None)
}
