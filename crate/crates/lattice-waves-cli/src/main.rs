use std::process::ExitCode;

use clap::Parser;
use lattice_waves_cli::config::Cli;

fn main() -> ExitCode {
    ExitCode::from(lattice_waves_cli::run_cli(Cli::parse()))
}
