use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gbsde::error::Error;
use gbsde::runner::{self, Subcommand as Cmd};

/// Monte Carlo laboratory for backward SDEs: simulate paths, solve the
/// backward equation, estimate sup-vs-bracket moment ratios, reproduce the
/// quadratic-driver blowup, and verify driver claims.
#[derive(Parser)]
#[command(name = "gbsde", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (beats GBSDE_OUT and the config's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores); results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the Brownian batch and write per-node statistics.
    Simulate(CommonArgs),
    /// Solve the backward equation and write node/step summaries.
    Solve(CommonArgs),
    /// Solve, then estimate both moment-ratio orientations per exponent.
    Ratio(CommonArgs),
    /// Run the quadratic-family divergence study.
    Counterexample(CommonArgs),
    /// Check the configured driver's claims and the domination suite.
    Verify(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Command::Simulate(a) => (Cmd::Simulate, a),
        Command::Solve(a) => (Cmd::Solve, a),
        Command::Ratio(a) => (Cmd::Ratio, a),
        Command::Counterexample(a) => (Cmd::Counterexample, a),
        Command::Verify(a) => (Cmd::Verify, a),
    };

    match runner::load_and_run(cmd, &args.config, args.out, args.workers) {
        Ok(outcome) => {
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            if cmd == Cmd::Verify && outcome.failed_checks > 0 {
                eprintln!(
                    "error kind=verify message=\"{} check(s) failed; see verify.csv\"",
                    outcome.failed_checks
                );
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let (kind, code) = match &err {
                Error::Config(_) | Error::InvalidArgument(_) | Error::ContractViolation(_) => {
                    ("config", 2)
                }
                Error::NumericalFailure { .. } | Error::DegenerateRatio(_) => ("numerical", 3),
                Error::Io { .. } => ("io", 1),
            };
            eprintln!("error kind={kind} message=\"{err}\"");
            ExitCode::from(code)
        }
    }
}
