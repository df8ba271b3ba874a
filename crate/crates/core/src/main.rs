use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use gapsched::harness::{self, validate, ExperimentConfig};
use gapsched::problems::{maxcut_to_ising, qubo_to_ising, rescale_ising, GraphInstance, IsingModel, QuboInstance};
use gapsched::schedule::{derive_angles, BezierGapCurve};
use gapsched::spectrum::{gap_profile, uniform_grid, write_profile_csv, DEFAULT_GRID_POINTS};
use gapsched::Error;

#[derive(Parser)]
#[command(name = "gapsched", version, about = "Gap-informed QAOA schedules: learning, benchmarking and inspection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the gap ensemble and fit the mean and median curves.
    Learn {
        #[arg(long)]
        config: PathBuf,
    },
    /// Benchmark heuristic schedules against vanilla QAOA.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Directory holding curve_mean.json and curve_median.json.
        #[arg(long)]
        curves: PathBuf,
    },
    /// Gap profile of one instance file (QUBO or graph document).
    Gaps {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid: usize,
        /// Rescale a QUBO by its bounds hint before diagonalizing.
        #[arg(long)]
        rescale: bool,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Angle schedule derived from a gap curve.
    Angles {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in consistency suites.
    Validate,
}

enum Failure {
    Validation(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Config(msg),
            other => Failure::Validation(other.to_string()),
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_instance(path: &Path, rescale: bool) -> Result<IsingModel, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| Failure::Config(format!("{}: {e}", path.display()));
    if value.get("coeffs").is_some() {
        let q: QuboInstance = serde_json::from_value(value).map_err(bad)?;
        let m = qubo_to_ising(&q);
        match (rescale, q.bounds_hint()) {
            (true, Some((lo, hi))) if hi > lo => Ok(rescale_ising(&m, lo, hi)?),
            (true, _) => Err(Failure::Config("--rescale needs a nondegenerate bounds_hint".into())),
            (false, _) => Ok(m),
        }
    } else if value.get("edges").is_some() {
        let g: GraphInstance = serde_json::from_value(value).map_err(bad)?;
        Ok(maxcut_to_ising(&g)?.to_minimization())
    } else {
        Err(Failure::Config(format!("{}: neither a QUBO nor a graph document", path.display())))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Learn { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let a = harness::run_learning_phase(&cfg)?;
            info!("wrote curves to {}", cfg.output_path().display());
            println!(
                "mean curve degree {} rms {:.6}; median curve degree {} rms {:.6}",
                a.curve_mean.degree, a.curve_mean.rms_residual, a.curve_median.degree, a.curve_median.rms_residual
            );
        }
        Command::Bench { config, curves } => {
            let cfg = ExperimentConfig::load(&config)?;
            let records = harness::run_benchmark_phase(&cfg, &curves)?;
            let failed = records.iter().filter(|r| r.error.is_some()).count();
            println!("{} records, {} failed cells", records.len(), failed);
        }
        Command::Gaps {
            instance,
            grid,
            rescale,
            out,
        } => {
            if grid < 2 {
                return Err(Failure::Config("--grid must be at least 2".into()));
            }
            let m = load_instance(&instance, rescale)?;
            let profile = gap_profile(&m, &uniform_grid(grid))?;
            let mut w = output(out.as_deref())?;
            write_profile_csv(&mut w, &profile)?;
            w.flush().map_err(Error::from)?;
        }
        Command::Angles { curve, p, kappa, q, out } => {
            let curve = BezierGapCurve::from_json_file(&curve).map_err(|e| Failure::Config(e.to_string()))?;
            let schedule = derive_angles(p, kappa, q, &curve).map_err(|e| Failure::Config(e.to_string()))?;
            let mut w = output(out.as_deref())?;
            schedule.write_csv(&mut w)?;
            w.flush().map_err(Error::from)?;
        }
        Command::Validate => {
            let checks = validate::run_all();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Failure::Validation(format!("{failed} check(s) failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
    }
}
