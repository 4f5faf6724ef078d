//! `zeroreg` — batch front end for the registration toolkit.
//!
//! Exit codes: 0 success, 1 usage or I/O failure, 2 registration failure or
//! insufficient input data. All results are JSON on stdout (or `--out`);
//! human summaries go to stderr.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use zeroreg_core::Error;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: &Cli) -> zeroreg_core::Result<()> {
    match &cli.command {
        Command::Register(args) => commands::register::run(args),
        Command::Benchmark(args) => commands::benchmark::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::Inspect(args) => commands::inspect::run(args),
    }
}

/// Usage and I/O problems exit 1; anything the pipeline itself raised —
/// including insufficient input data — exits 2.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_)
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::Config { .. }
        | Error::Benchmark(_) => 1,
        _ => 2,
    }
}

/// Sizes the global worker pool: `--threads` wins, then ZEROREG_THREADS,
/// and 0 (or neither) leaves rayon at one thread per core.
fn init_threads(flag: Option<usize>) -> zeroreg_core::Result<()> {
    let count = match flag {
        Some(n) => n,
        None => match std::env::var("ZEROREG_THREADS") {
            Ok(text) => text.trim().parse::<usize>().map_err(|e| {
                Error::InvalidArgument(format!(
                    "ZEROREG_THREADS=`{text}` is not a thread count: {e}"
                ))
            })?,
            Err(_) => 0,
        },
    };
    if count > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}
