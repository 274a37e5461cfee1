//! `intervene`: reproducible scenario runs for the adaptive-intervention
//! decision engine.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use intervene_cli::commands;
use intervene_cli::config::load_scenario;

#[derive(Parser)]
#[command(
    name = "intervene",
    about = "Adaptive-intervention decision engine: seeded simulations, survival fits, \
             bandit decisions, restless allocation, and experiment analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a bandit-sim or rmab-sim scenario and export metrics.
    Simulate(RunArgs),
    /// Fit survival models from a CSV and rank the cohort by risk.
    FitSurvival(RunArgs),
    /// Stream decision requests through a checkpointable policy.
    Decide(RunArgs),
    /// Compute one budgeted allocation round over a cohort file.
    Allocate(RunArgs),
    /// Run a synthetic experiment and estimate the treatment effect.
    Experiment(RunArgs),
    /// Summarize a prior run's metrics file.
    Report(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario config (TOML; seeds are mandatory).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: PathBuf,
}

fn run(command: &Command) -> anyhow::Result<()> {
    let args = match command {
        Command::Simulate(a)
        | Command::FitSurvival(a)
        | Command::Decide(a)
        | Command::Allocate(a)
        | Command::Experiment(a)
        | Command::Report(a) => a,
    };
    let config = load_scenario(&args.config)?;
    match command {
        Command::Simulate(_) => commands::simulate::run(&config, &args.out),
        Command::FitSurvival(_) => commands::fit_survival::run(&config, &args.out),
        Command::Decide(_) => commands::decide::run(&config, &args.out),
        Command::Allocate(_) => commands::allocate::run(&config, &args.out),
        Command::Experiment(_) => commands::experiment::run(&config, &args.out),
        Command::Report(_) => commands::report::run(&config, &args.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One machine-parsable line; inner newlines flattened.
            let msg = format!("{err:#}").replace('\n', "; ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
