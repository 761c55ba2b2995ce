//! Configuration, setup and subcommands behind the `heatopt` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod setup;

pub use config::{Problem, RunConfig};
pub use error::CliError;
