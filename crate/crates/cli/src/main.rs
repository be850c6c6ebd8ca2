//! `chemovar` command-line front end.
//!
//! Exit codes:
//!
//! | command        | 0                  | 1                     | 2          | 3     |
//! |----------------|--------------------|-----------------------|------------|-------|
//! | `analyze`      | guaranteed         | not guaranteed        | degenerate or error | |
//! | `solve`        | nontrivial found   | trivial only          |            | error |
//! | `probe`        | PASS               | FAIL                  |            | error |
//! | `spectrum`     | ok                 |                       |            | error |
//! | `continuation` | reached the end    | stopped early         |            | error |

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chemovar::Verdict;
use config::{RunArgs, RunConfig};

#[derive(Parser)]
#[command(name = "chemovar", version, about = "Stationary Keller-Segel workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    args: RunArgs,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Index arithmetic and existence verdict for (β, ρ).
    Analyze,
    /// Search for nontrivial critical points; writes JSON.
    Solve,
    /// Bubble-estimate probe over a Λ-grid; writes CSV and a PASS/FAIL line.
    Probe,
    /// Neumann eigenvalues as CSV `index,lambda`.
    Spectrum,
    /// Follow a solution branch from (β, ρ) to (β_end, ρ_end).
    Continuation,
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("KS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("KS_THREADS must be a positive integer, got `{raw}`"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(command: Command, cfg: &RunConfig) -> ExitCode {
    let code = match command {
        Command::Analyze => match commands::analyze(cfg) {
            Ok(Verdict::GuaranteedNontrivial) => Ok(0),
            Ok(Verdict::NotGuaranteed) => Ok(1),
            Ok(Verdict::Degenerate) => Ok(2),
            Err(e) => Err((e, 2)),
        },
        Command::Solve => commands::solve(cfg).map(|found| if found { 0 } else { 1 }).map_err(|e| (e, 3)),
        Command::Probe => commands::probe(cfg).map(|pass| if pass { 0 } else { 1 }).map_err(|e| (e, 3)),
        Command::Spectrum => commands::spectrum(cfg).map(|_| 0).map_err(|e| (e, 3)),
        Command::Continuation => commands::continuation(cfg)
            .map(|done| if done { 0 } else { 1 })
            .map_err(|e| (e, 3)),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err((e, c)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(c)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    let failure = match cli.command {
        Command::Analyze => 2,
        _ => 3,
    };
    match RunConfig::resolve(&cli.args) {
        Ok(cfg) => run(cli.command, &cfg),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(failure)
        }
    }
}
