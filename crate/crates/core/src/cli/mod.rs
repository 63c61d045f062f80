//! The `tmach` command line.
//!
//! Exit codes: 0 on success, 2 for bad input (flags, files, dimensions),
//! 3 when a solver fails.

mod args;
mod bench;
mod commands;
mod config;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub use args::Cli;
pub use bench::{rel_err, rel_time};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug)]
pub(crate) struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    pub(crate) fn data(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }

    pub(crate) fn solver(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_SOLVER,
            message: message.to_string(),
        }
    }
}

pub(crate) type CliResult<T> = std::result::Result<T, Failure>;

/// Tags library errors with the exit code of the stage they came from.
pub(crate) trait Stage<T> {
    fn data_stage(self) -> CliResult<T>;
    fn solver_stage(self) -> CliResult<T>;
}

impl<T> Stage<T> for crate::error::Result<T> {
    fn data_stage(self) -> CliResult<T> {
        self.map_err(Failure::data)
    }

    fn solver_stage(self) -> CliResult<T> {
        self.map_err(|e| match e {
            Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::InvalidLabel { .. } => Failure::data(e),
            _ => Failure::solver(e),
        })
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match config::inject(argv) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_DATA } else { EXIT_OK };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
