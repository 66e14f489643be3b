//! Command-line front end: `train`, `backtest`, `whatif` and `serve`.

pub mod commands;
pub mod config;
pub mod server;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use cryptodbn::backtest::BacktestError;
use cryptodbn::dbn::DbnError;

pub use config::{BaselineArgs, DataArgs, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Convergence(_) => EXIT_CONVERGENCE,
            CliError::Usage(_) | CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<BacktestError> for CliError {
    fn from(e: BacktestError) -> Self {
        if e.is_convergence() {
            CliError::Convergence(format!("backtest: {e}"))
        } else {
            CliError::Data(format!("backtest: {e}"))
        }
    }
}

impl From<DbnError> for CliError {
    fn from(e: DbnError) -> Self {
        CliError::Data(format!("dbn: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "cryptodbn", version, about = "Next-day crypto price direction with dynamic Bayesian networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Learn one model per requested group on all aligned rows and write it
    Train {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Train on the first part of the series, score the rest, compare baselines
    Backtest {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        baselines: BaselineArgs,
    },
    /// Posterior of a node given fixed states
    Whatif {
        /// Model JSON written by train or backtest
        #[arg(long)]
        model: PathBuf,
        /// Evidence as slice:variable=Up|Down, comma separated
        #[arg(long, default_value = "")]
        evidence: String,
        /// Built-in five-day scenario (ethereum or tether), merged before --evidence
        #[arg(long)]
        preset: Option<String>,
        /// Query node as slice:variable (default: target at the last slice)
        #[arg(long)]
        query: Option<String>,
        /// Print the response as JSON
        #[arg(long)]
        json: bool,
    },
    /// HTTP what-if API and UI assets for one model
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory with the built UI (default: bundled placeholder)
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

/// Runs a parsed command; `env_seed` is the value of `DBN_SEED`, if set.
pub fn run(cli: Cli, env_seed: Option<String>) -> Result<(), CliError> {
    match cli.command {
        Command::Train { data } => {
            let config = RunConfig::resolve(&data, &BaselineArgs::default(), env_seed)?;
            commands::train(&config)
        }
        Command::Backtest { data, baselines } => {
            let config = RunConfig::resolve(&data, &baselines, env_seed)?;
            commands::backtest(&config)
        }
        Command::Whatif {
            model,
            evidence,
            preset,
            query,
            json,
        } => commands::whatif(&model, &evidence, preset.as_deref(), query.as_deref(), json),
        Command::Serve {
            model,
            port,
            host,
            assets,
        } => server::serve(&model, &host, port, assets),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cryptodbn::baselines::BaselineError;

    #[test]
    fn exit_codes() {
        let numeric = BacktestError::BaselineFor {
            coin: "x".into(),
            model: "ARIMA",
            source: BaselineError::NonConvergence(vec!["(1,0,1)".into()]),
        };
        assert_eq!(CliError::from(numeric).exit_code(), EXIT_CONVERGENCE);
        let nested = BacktestError::Group {
            coin: "x".into(),
            group: 2,
            source: Box::new(BacktestError::Baseline(BaselineError::NonConvergence(vec![]))),
        };
        assert_eq!(CliError::from(nested).exit_code(), EXIT_CONVERGENCE);
        let data = BacktestError::TooShort { rows: 3, t: 5 };
        assert_eq!(CliError::from(data).exit_code(), EXIT_DATA);
        assert_eq!(CliError::from(DbnError::UnknownVariable("v".into())).exit_code(), EXIT_DATA);
    }
}
