//! Command-line workflows on top of the `hemn` library: config loading,
//! the analyze / simulate / fit / sweep commands, and table output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod units;

pub use error::CliError;
