//! Command-line driver: `polcomp <subcommand> [options]`.
//!
//! Exit status is 0 on success, 1 for invalid input and 2 for failures
//! while running or writing output.

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use polcomp_core::GameError;

mod args;
mod commands;
mod output;

pub use args::Cli;
use args::Command;
use commands::{Globals, Outcome};
pub use output::{fmt_f64, SCHEMA_VERSION};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let g = Globals {
        seed: cli.seed,
        timing: cli.timing,
    };
    match &cli.command {
        Command::Solve1d(a) => commands::solve_1d_cmd(a),
        Command::Gba(a) => commands::gba_cmd(a, &g),
        Command::Ascend(a) => commands::ascend_cmd(a, &g),
        Command::Monotonicity(a) => commands::monotonicity_cmd(a, &g),
        Command::SimulateVote(a) => commands::simulate_vote_cmd(a, &g),
        Command::Certify(a) => commands::certify_cmd(a, &g),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let outcome = match cli.threads {
        Some(0) => return Err(CliError::Validation("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| dispatch(cli))?,
        None => dispatch(cli)?,
    };
    match &cli.out {
        Some(path) => {
            output::write_atomic(path, &outcome.bytes)
                .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
            println!("{} -> {}", outcome.summary, path.display());
        }
        None => {
            std::io::stdout()
                .write_all(&outcome.bytes)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            eprintln!("{}", outcome.summary);
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
