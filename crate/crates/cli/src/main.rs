#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod data;
mod output;

use std::process::ExitCode;

use clap::Parser;
use geneo_core::GeneoError;

use args::{Cli, Command};

/// Invalid flag combination or value; exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// One or more properties failed; exit code 1.
#[derive(Debug)]
pub struct VerificationFailed(pub usize);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} propert{} failed", self.0, if self.0 == 1 { "y" } else { "ies" })
    }
}

impl std::error::Error for VerificationFailed {}

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<VerificationFailed>() {
            return EXIT_FAILURE;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<GeneoError>() {
            return match e {
                GeneoError::Io { .. }
                | GeneoError::IdxMagic { .. }
                | GeneoError::IdxTruncated { .. }
                | GeneoError::IdxFormat(_)
                | GeneoError::MissingClasses(_)
                | GeneoError::Frequency(_)
                | GeneoError::Parse(_)
                | GeneoError::Json(_) => EXIT_IO,
                GeneoError::GridTooSmall { .. }
                | GeneoError::GridMismatch { .. }
                | GeneoError::GroupBudget { .. }
                | GeneoError::NonPositiveEpsilon(_)
                | GeneoError::InvalidOperator(_)
                | GeneoError::Dimension(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            };
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Select(a) => commands::select(a),
        Command::Verify(a) => commands::verify(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Net(a) => commands::net(a),
        Command::IngestCheck(a) => commands::ingest_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
