//! Batch revision reports: every prompt over every paragraph of a file.

pub mod app;
pub mod report;

pub use app::{run, Cli, CliError, Outcome};
pub use report::{build_report, resolve_prompts, Report, REPORT_SCHEMA, REPORT_VERSION};
