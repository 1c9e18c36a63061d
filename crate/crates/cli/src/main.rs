use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hanzawa_flow::config::RunConfig;
use hanzawa_flow::driver::{run, summarize};
use hanzawa_flow::error::FlowError;
use hanzawa_flow::nonlinear::HaltReason;
use hanzawa_flow::verify::{print_table, run_suite, SUITES};

/// Two-phase flow with soluble surfactant on a fixed reference domain.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for diagnostics, snapshots and the manifest.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite and print one line per check.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
    },
    /// Summarize a finished run directory.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

const CONFIG_ERROR: u8 = 2;
const SOLVER_ERROR: u8 = 3;

fn exit_code(e: &FlowError) -> u8 {
    match e {
        FlowError::Config(_) | FlowError::Geometry(_) | FlowError::Material(_) | FlowError::Snapshot(_) => CONFIG_ERROR,
        FlowError::Io(_) => 1,
        _ => SOLVER_ERROR,
    }
}

fn fail(e: FlowError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn configure_threads() -> Result<(), FlowError> {
    let Ok(v) = std::env::var("HANZAWA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| FlowError::Config(format!("HANZAWA_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| FlowError::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return fail(e);
    }
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match run(&cfg, &out) {
                Ok(outcome) => {
                    let last = outcome.records.last().map(|r| r.t).unwrap_or(0.0);
                    println!("{} ({} rows, t = {last}) -> {}", outcome.halt, outcome.records.len(), out.display());
                    if outcome.halt == HaltReason::ReachedEnd {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(SOLVER_ERROR)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { suite } => {
            let checks = run_suite(&suite).expect("suite names are validated by the parser");
            print!("{}", print_table(&checks));
            let failed = checks.iter().filter(|c| !c.pass).count();
            println!("{} checks, {failed} failed", checks.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Report { dir } => match summarize(&dir) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
