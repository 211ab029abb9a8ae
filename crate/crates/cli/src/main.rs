//! `graphase`: simulate, check, retrieve and build counterexamples for the
//! Schrödinger equation on finite graphs.

mod commands;

use std::process::ExitCode;

use clap::Parser;

use commands::{Cli, Outcome};

fn configure_threads() {
    let threads = std::env::var("GRAPHASE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match commands::dispatch(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::HypothesisFailed) => ExitCode::from(2),
        Ok(Outcome::Uncertified) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
