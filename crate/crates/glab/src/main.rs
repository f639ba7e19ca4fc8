use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use glab::config::{self, Experiment, ExperimentConfig};
use glab::experiments::{self, RunError};
use glab::report::{self, Provenance};
use glab::validate::{validate, Invalid};

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "glab", version, about = "Finite Fock-space Gibbs sampler experiments")]
struct Cli {
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (overrides output_dir in the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random probes (overrides seed in the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run { config: PathBuf },
    /// Parse and check a config without computing anything
    Validate { config: PathBuf },
    /// List the available experiments
    ListExperiments,
}

fn load(path: &Path) -> Result<ExperimentConfig, (u8, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| (EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    let cfg = config::parse(&text).map_err(|e| (EXIT_PARSE, format!("{}: parse error: {e}", path.display())))?;
    validate(&cfg).map_err(|e| invalid_exit(path, e))?;
    Ok(cfg)
}

fn invalid_exit(path: &Path, e: Invalid) -> (u8, String) {
    match e {
        Invalid::Parse(p) => (EXIT_PARSE, format!("{}: parse error: {p}", path.display())),
        Invalid::Precondition(m) => (EXIT_PRECONDITION, format!("{}: precondition violated: {m}", path.display())),
    }
}

fn run(cli: &Cli, path: &Path) -> Result<bool, (u8, String)> {
    let mut cfg = load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)).max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| (EXIT_NUMERICAL, e.to_string()))?;
    let start = Instant::now();
    let outcome = pool.install(|| experiments::run(&cfg)).map_err(|e| match e {
        RunError::Invalid(i) => invalid_exit(path, i),
        RunError::Numerical(m) => (EXIT_NUMERICAL, format!("{}: computation failed: {m}", path.display())),
    })?;
    let prov = Provenance {
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        wall_time_s: start.elapsed().as_secs_f64(),
        workers,
    };
    let dir = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("glab-out"));
    report::write_all(&dir, &cfg, &outcome, &prov).map_err(|e| (EXIT_NUMERICAL, format!("cannot write to {}: {e}", dir.display())))?;
    for (k, s) in &outcome.summary {
        println!("{k} = {} [{}]", s.value, s.source);
    }
    for c in &outcome.checks {
        println!("check {}: {} ({})", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
    }
    println!("report written to {}", dir.join("report.json").display());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<12} {}", e.name(), e.describe());
            }
            Ok(true)
        }
        Command::Validate { config } => load(config).map(|_| {
            println!("ok");
            true
        }),
        Command::Run { config } => run(&cli, config),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECKS_FAILED),
        Err((code, msg)) => {
            eprintln!("glab: {msg}");
            ExitCode::from(code)
        }
    }
}
