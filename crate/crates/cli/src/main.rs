//! `fracdiff` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
mod suite;

use std::process::ExitCode;

use clap::Parser;

use crate::config::{Cli, Command, CommandKind, RunConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = match &cli.command {
        Command::Profile(f) => (CommandKind::Profile, f),
        Command::Fundsol(f) => (CommandKind::Fundsol, f),
        Command::Evolve(f) => (CommandKind::Evolve, f),
        Command::Verify(f) => (CommandKind::Verify, f),
        Command::Decay(f) => (CommandKind::Decay, f),
    };
    let result = RunConfig::from_flags(kind, flags)
        .map_err(commands::CliError::from)
        .and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
