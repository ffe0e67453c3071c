//! Command-line driver: config loading, dispatch to the core harness and
//! bound evaluators, and CSV/JSON output.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod report;
pub mod table;

pub use cli::{run, Cli};
pub use error::{CliError, Result};
