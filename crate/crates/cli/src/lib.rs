//! Command-line front end for the `bitpact` library.
//!
//! Exit codes: 0 success, 1 self-check failure, 2 usage error.

pub mod commands;
pub mod config;
pub mod opts;
pub mod report;

use std::fmt;
use std::process::ExitCode;

use bitpact::protocol::ProtocolError;
use clap::Parser;

pub use opts::{Cli, Command};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad flags, config or I/O target.
    Usage(String),
    /// A built-in consistency check failed.
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Check(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Params(_) | ProtocolError::Bits(_) | ProtocolError::Rand(_) => CliError::Usage(e.to_string()),
            ProtocolError::Trial { ref source, .. } if matches!(**source, ProtocolError::Params(_)) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Check(other.to_string()),
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `std::env::args`, runs the subcommand and maps the outcome to
/// an exit code.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
