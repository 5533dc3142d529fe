//! Command-line front end for `tweedie-boost`.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;

use config::{load_file, merge, Cli, Command};
use error::CliResult;

/// Runs a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => Some(load_file(path)?),
        None => None,
    };
    let file = file.as_ref();
    let name = cli.command.name();
    match &cli.command {
        Command::Fit(a) => commands::fit_cmd(&merge(name, a, file)?),
        Command::Predict(a) => commands::predict_cmd(&merge(name, a, file)?),
        Command::Tune(a) => commands::tune_cmd(&merge(name, a, file)?),
        Command::Profile(a) => commands::profile_cmd(&merge(name, a, file)?),
        Command::Importance(a) => commands::importance_cmd(&merge(name, a, file)?),
        Command::Pdp(a) => commands::pdp_cmd(&merge(name, a, file)?),
        Command::Lorenz(a) => commands::lorenz_cmd(&merge(name, a, file)?),
        Command::Simulate(a) => commands::simulate_cmd(&merge(name, a, file)?),
    }
}
