//! Command-line driver for the `eqboost` experiments.

pub mod commands;
pub mod config;
pub mod csvout;

use std::ffi::OsString;
use std::io::Write;

use config::{parse_args, resolve_seed, Command, Parsed};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run(
    argv: &[OsString],
    env_seed: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match parse_args(argv) {
        Ok(Parsed::Run(cli)) => cli,
        Ok(Parsed::Info(text)) => {
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
        Ok(Parsed::Usage(text)) => {
            let _ = write!(err, "{text}");
            return EXIT_USAGE;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let seed = match cli
        .command
        .validate()
        .and_then(|()| resolve_seed(cli.command.seed_flag(), env_seed))
    {
        Ok(seed) => seed,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match &cli.command {
        Command::Learn(a) => commands::learn(a, seed, out),
        Command::Game(a) => commands::game(a, seed, out),
        Command::Process(a) => commands::process(a, seed, out),
        Command::Compare(a) => commands::compare(a, seed, out),
        Command::Verify(a) => commands::verify(a, seed, out, err),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILURE,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}
