//! Command-line front end for `powerdiv-core`: bound evaluation, the uniform
//! allocation table, Monte Carlo verification and parameter sweeps.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error,
//! 3 computational precondition failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::path::Path;

pub use commands::{execute, Command};
pub use config::Config;
pub use error::{CliError, Result};
pub use report::{Format, Report, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

/// Executes and writes the report: to `output.path` when set, to stdout
/// otherwise. Warnings go to stderr.
pub fn run_and_emit(command: Option<Command>, mut cfg: Config) -> Result<Report> {
    let command = match command {
        Some(c) => c,
        None => cfg
            .str_opt("command")?
            .ok_or_else(|| CliError::Config("no command given and none recorded in the config".into()))?
            .parse()?,
    };
    let format: Format = cfg.string("output.format", "text")?.parse()?;
    let report = execute(command, &mut cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match cfg.str_opt("output.path")? {
        Some(path) => {
            report.write(format, Path::new(&path))?;
            eprintln!("wrote {path}");
        }
        None => print!("{}", report.render(format, false)),
    }
    Ok(report)
}

/// [`run_and_emit`] reduced to an exit code; errors are printed to stderr.
pub fn run(command: Option<Command>, cfg: Config) -> i32 {
    match run_and_emit(command, cfg) {
        Ok(report) => report.exit_code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
