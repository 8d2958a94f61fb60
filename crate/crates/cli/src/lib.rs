//! Command-line surface of `hardy-core`: config resolution, concurrent
//! evaluation of parameter cells and JSON/CSV reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::{Cli, Command, CommonArgs, Format, RunConfig};
pub use error::CliError;
pub use report::{Report, ReportRow, Status, TraceKind, TracePoint};

/// Runs one invocation and writes its report. `Ok(false)` means the report
/// was written but some row failed.
pub fn execute(cli: Cli) -> Result<bool, CliError> {
    let (command, args) = cli.command.split();
    let config = RunConfig::resolve(command, args)?;
    let rows = commands::run(&config)?;
    let report = Report::new(config, rows);
    report.write()?;
    Ok(report.all_ok())
}
