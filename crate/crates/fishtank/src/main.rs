use std::process::ExitCode;

use clap::Parser;
use fishtank::cli::{self, Cli};

fn main() -> ExitCode {
    cli::run(Cli::parse())
}
