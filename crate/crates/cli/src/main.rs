use std::process::ExitCode;

use clap::Parser;
use cryptodbn_cli::{config::SEED_ENV, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli, std::env::var(SEED_ENV).ok()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
