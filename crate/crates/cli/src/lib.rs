//! Command-line front end: configuration, subcommands and file output.

pub mod commands;
pub mod config;
pub mod format;

pub use commands::Failure;
pub use config::RunConfig;
