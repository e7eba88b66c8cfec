//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure (bad flags, config or
//! parameters), 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use volterra_ri::experiments::{
    self, apply_overrides, configure_threads, load_config, load_config_str, CliOverrides,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "vri",
    about = "Reinsurance-investment equilibria under long-range-dependent mortality",
    version
)]
struct Cli {
    /// Experiment configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Monte Carlo path-count override.
    #[arg(long, global = true)]
    paths: Option<u64>,

    /// Control-grid step-count override.
    #[arg(long, global = true)]
    steps: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one mortality path and market scenario to CSV.
    Simulate,
    /// Tabulate the equilibrium controls for the configured regime.
    Strategy,
    /// Run the LRD-vs-Markov comparison harness and emit figure CSVs.
    Compare,
    /// Verify first-order conditions and the perturbation property.
    Verify,
    /// Report the sufficient-condition bounds (honest PASS/FAIL).
    Check,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, volterra_ri::Error> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => load_config_str("")?,
    };
    apply_overrides(
        &mut cfg,
        &CliOverrides {
            seed: cli.seed,
            out: cli.out.clone(),
            paths: cli.paths,
            steps: cli.steps,
        },
    )?;
    if cfg.all_default && cli.config.is_none() {
        eprintln!("note: no config given; running with the full default parameter set");
    }
    for line in &cfg.defaults_used {
        eprintln!("default: {line}");
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), volterra_ri::Error> {
    configure_threads();
    let cfg = load(cli)?;
    match cli.command {
        Command::Simulate => {
            for f in experiments::run_simulate(&cfg)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Strategy => {
            for f in experiments::run_strategy(&cfg)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Compare => {
            for f in experiments::run_compare(&cfg)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Verify => {
            let out = experiments::run_verify(&cfg)?;
            print!("{}", out.report);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if !out.passed {
                eprintln!("verification reported failures (see above)");
            }
        }
        Command::Check => {
            print!("{}", experiments::run_check(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Usage problems are validation failures: exit 1.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(experiments::exit_code_for(&e) as u8)
        }
    }
}
