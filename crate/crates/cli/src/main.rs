mod bench;
mod commands;
mod config;
mod error;
mod output;
mod repro;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Globals;
use crate::error::CliResult;

/// Resolvents of composite monotone operators `C^T M C`.
///
/// Exit codes: 0 success, 1 usage or configuration error, 2 non-convergence or a
/// failed check, 3 verification unsupported for the operator.
#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Overrides the stopping threshold.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Overrides the iteration budget.
    #[arg(long, global = true)]
    max_iter: Option<usize>,

    /// Seed for generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// J_{lambda C^T M C}(y) with Algorithm 1 or 2.
    Resolve,
    /// J_{lambda (M1 + C^T M2 C)}(y) with Algorithm 3.
    ResolveSum,
    /// Single-parameter versus two-parameter scheme over a list of mu.
    CompareMcx,
    /// Checks a candidate point through its inclusion residual.
    Verify {
        /// Candidate point as a one-column CSV; overrides the config.
        #[arg(long)]
        candidate: Option<PathBuf>,
        /// Largest accepted residual (default 1e-6).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Random instance grid, run in parallel.
    Bench,
    /// Equilibrium of a Lur'e system.
    LureEq,
    /// Regenerates the five-dimensional l1 example tables.
    ReproExample1,
}

fn run(cli: Cli) -> CliResult<()> {
    let g = Globals {
        config: cli.config,
        out: cli.out,
        tol: cli.tol,
        max_iter: cli.max_iter,
        seed: cli.seed,
    };
    match cli.command {
        Command::Resolve => commands::resolve(&g),
        Command::ResolveSum => commands::resolve_sum(&g),
        Command::CompareMcx => commands::compare_mcx(&g),
        Command::Verify { candidate, threshold } => commands::verify(&g, candidate, threshold),
        Command::Bench => bench::bench(&g),
        Command::LureEq => commands::lure_eq(&g),
        Command::ReproExample1 => repro::repro_example1(&g),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
