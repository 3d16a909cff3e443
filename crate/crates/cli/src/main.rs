use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use workbench::report::write_report;
use workbench::{run, CliError, Command, Config, RunContext, RunManifest, SweepCache};

#[derive(Parser)]
#[command(name = "shear-spectra", version, about = "Spectral thresholds of perturbed monotone shear flows")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config, or a manifest.json to re-run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "run")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Persistent eigen-solve cache; SHEAR_SPECTRA_CACHE overrides it.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Empty the cache before running.
    #[arg(long)]
    clear_cache: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Check the profile hypotheses.
    Validate(Common),
    /// Ground state of the Schrödinger operator.
    Eigen(Common),
    /// Critical amplitude m_*.
    Threshold(Common),
    /// Tabulate the threshold map.
    Mfun(Common),
    /// Continue the unstable eigenvalue branch.
    Branch(Common),
    /// Argument-principle zero count.
    Scan(Common),
    /// Steady states bifurcating from the shear.
    Bifurcate(Common),
    /// Linearized time evolution.
    Evolve(Common),
    /// Summarize completed runs.
    Report {
        /// Run directories, or parents of run directories.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
}

/// Remaining argv and the (name, value) tolerance overrides.
type SplitArgs = (Vec<String>, Vec<(String, String)>);

/// Split `--tol.<name>=<v>` and `--tol.<name> <v>` out of argv.
fn split_tol_flags(args: Vec<String>) -> std::result::Result<SplitArgs, CliError> {
    let (mut rest, mut tols) = (Vec::new(), Vec::new());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(spec) = a.strip_prefix("--tol.") else {
            rest.push(a);
            continue;
        };
        match spec.split_once('=') {
            Some((k, v)) => tols.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| CliError::config(format!("--tol.{spec} needs a value")))?;
                tols.push((spec.to_string(), v));
            }
        }
    }
    Ok((rest, tols))
}

fn load_config(path: Option<&PathBuf>) -> workbench::Result<Config> {
    let Some(p) = path else { return Ok(Config::default()) };
    if p.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
        let m: RunManifest = serde_json::from_str(&text)?;
        let mut c = Config::default();
        for (k, v) in &m.config {
            c.set(k, v)?;
        }
        return Ok(c);
    }
    Config::load(p)
}

fn execute(cmd: Command, common: &Common, tols: &[(String, String)]) -> workbench::Result<RunManifest> {
    let mut config = load_config(common.config.as_ref())?;
    for (k, v) in tols {
        config.set(&format!("tol.{k}"), v)?;
    }
    let cache_dir = std::env::var_os("SHEAR_SPECTRA_CACHE")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| common.cache_dir.clone());
    let cache = SweepCache::new(cache_dir)?;
    if common.clear_cache {
        cache.clear()?;
    }
    let workers = common
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    run(cmd, &RunContext { config, out: &common.out, workers, cache: &cache })
}

fn main() -> ExitCode {
    let (args, tols) = match split_tol_flags(std::env::args().collect()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Sub::Validate(c) => execute(Command::Validate, c, &tols),
        Sub::Eigen(c) => execute(Command::Eigen, c, &tols),
        Sub::Threshold(c) => execute(Command::Threshold, c, &tols),
        Sub::Mfun(c) => execute(Command::Mfun, c, &tols),
        Sub::Branch(c) => execute(Command::Branch, c, &tols),
        Sub::Scan(c) => execute(Command::Scan, c, &tols),
        Sub::Bifurcate(c) => execute(Command::Bifurcate, c, &tols),
        Sub::Evolve(c) => execute(Command::Evolve, c, &tols),
        Sub::Report { dirs, out } => {
            if !tols.is_empty() {
                Err(CliError::config("report takes no tolerances"))
            } else {
                write_report(dirs, out).inspect(|_| {
                    if let Ok(t) = std::fs::read_to_string(out.join("summary.txt")) {
                        print!("{t}");
                    }
                })
            }
        }
    };
    match result {
        Ok(m) => {
            if m.subcommand != "report" {
                println!("{}: {} ({} outputs)", m.subcommand, m.status, m.outputs.len());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
