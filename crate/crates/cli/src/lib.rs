//! The `gestigo` command line.

pub mod args;
pub mod cmd;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};

/// Environment variable capping the compute and I/O worker threads.
pub const THREADS_ENV: &str = "GESTIGO_THREADS";

fn threads() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::data(format!("{THREADS_ENV}={v} is not a positive integer"))),
        },
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 usage, 2 data or I/O, 3 numeric.
pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    match dispatch(args.into_iter().collect()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.line());
            e.kind.exit_code()
        }
    }
}

fn dispatch(argv: Vec<OsString>) -> CliResult<i32> {
    let argv = config::merge(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Ok(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let threads = threads()?;
    if let Some(n) = threads {
        // Fails only if a pool already exists, as in tests that call run twice.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Synth(a) => cmd::synth::run(a),
        Command::Encode(a) => cmd::encode::run(a),
        Command::Train(a) => cmd::train::run(a),
        Command::Eval(a) => cmd::eval::run(a),
        Command::VoSearch(a) => cmd::search::run(a),
        Command::Serve(a) => cmd::serve::run(a, threads),
        Command::Replay(a) => cmd::replay::run(a, threads),
    }?;
    Ok(0)
}
