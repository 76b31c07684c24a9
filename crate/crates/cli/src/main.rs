//! `malpha` — compute with continued fractions and the sum S_M(α) = Σ 1/‖mα‖
//! from the command line.
//!
//! Subcommands map onto library entry points: `expand` prints quotient and
//! convergent tables, `sum` encloses S_M and its variants, `bounds` compares
//! S_M against its reference caps, and `experiment` runs seeded Monte Carlo
//! ensembles. Output is deterministic: rerunning a command with identical
//! flags produces byte-identical bytes.
//!
//! Exit codes: 0 success, 2 invalid input (including degenerate rational α),
//! 3 expansion depth or validity horizon exhausted, 4 runtime budget
//! exceeded, 1 I/O failure.

mod args;
mod commands;
mod output;

use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
