//! `svq` — command-line harness for the stochastic vector quantiser
//! pipeline: generate the synthetic jammer/signal scenario, train an encoder
//! codebook, and evaluate jammer nulling.
//!
//! Exit codes: 0 on success, 1 on validation failures (bad config, bad
//! arguments, failed checks), 2 on I/O or file-format errors.

use clap::{Parser, Subcommand};
use svq_cli::{commands, config};
use std::path::PathBuf;
use std::process::ExitCode;
use svq_core::Error;

#[derive(Parser)]
#[command(
    name = "svq",
    version,
    about = "Stochastic vector quantiser: scenario generation, training, jammer nulling"
)]
struct Cli {
    /// Flat `key = value` config file (defaults apply when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override both the scenario and training seeds.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory for all artifacts (default: runs).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic scenario dataset (dataset.csv).
    Gen,
    /// Train a codebook on dataset.csv (codebook.svq, trace.csv).
    Train,
    /// Evaluate nulling depth over pure-jammer locations (sweep.csv).
    Sweep,
    /// Null one held-out sample and dump before/after (null_example.csv).
    NullExample,
    /// Check analytic gradients against finite differences.
    Gradcheck,
    /// Run the enumeration-oracle identity checks.
    Oracle,
    /// Pilot-train over a θ grid and recommend one (calibration.csv).
    CalibrateTheta,
}

fn run(cli: Cli) -> svq_core::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => config::RunConfig::parse(&std::fs::read_to_string(path)?)?,
        None => config::RunConfig::default(),
    };
    cfg.apply_overrides(cli.seed, cli.out);
    cfg.validate()?;
    match cli.command {
        Command::Gen => commands::gen(&cfg),
        Command::Train => commands::train_cmd(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::NullExample => commands::null_example(&cfg),
        Command::Gradcheck => commands::gradcheck_cmd(&cfg),
        Command::Oracle => commands::oracle_cmd(&cfg),
        Command::CalibrateTheta => commands::calibrate_theta(&cfg),
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Format(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successes; usage mistakes are
            // validation failures.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
