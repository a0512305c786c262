//! Command-line front door: polyhedron analysis, exponential-sum evaluation,
//! divergence scans, Gauss-sum tables, arc classification, and the identity
//! verification suite. Output is machine-first (JSON/CSV); every run is
//! reproducible from its arguments alone and byte-identical across worker
//! counts.

mod config;
mod freq;
mod run;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = run::Cli::parse_from(args);
    match run::execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
