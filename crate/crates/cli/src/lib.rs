//! Command-line runner for `rho_lab`: experiment subcommands that write
//! JSON-lines records plus a JSON summary, and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::run;
pub use error::CliError;
