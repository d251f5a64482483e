use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dredge::pipeline::{exit_code_for, load_config, run_command};

/// Cross-sectional signal mining and out-of-sample evaluation on monthly
/// return panels.
#[derive(Parser)]
#[command(name = "dredge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic monthly/accounting panel.
    Synth(ConfigArg),
    /// Enumerate the signal universe and evaluate every strategy.
    Mine(ConfigArg),
    /// Evaluate the ticker-letter control universe.
    Tickers(ConfigArg),
    /// Screen benchmarks, match them to targets, and build event-time series.
    Match(ConfigArg),
    /// Bin sorts, theme tables, decay regressions, and factor diagnostics.
    Report(ConfigArg),
    /// Selection-decay model: exact enumeration and Monte Carlo checks.
    Simulate(ConfigArg),
}

#[derive(clap::Args)]
struct ConfigArg {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Synth(a) => ("synth", a),
        Command::Mine(a) => ("mine", a),
        Command::Tickers(a) => ("tickers", a),
        Command::Match(a) => ("match", a),
        Command::Report(a) => ("report", a),
        Command::Simulate(a) => ("simulate", a),
    };
    let loaded = match load_config(&args.config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    match run_command(name, &loaded) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
