//! Command-line front end: model loading, the commands, and their reports.

pub mod commands;
pub mod report;

pub use commands::{run, Cli, CliError, Outcome};
pub use report::{Report, Status, Table};
