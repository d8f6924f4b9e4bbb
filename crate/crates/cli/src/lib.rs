//! Command-line front end: configuration, artifact writers and sweeps.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::RunConfig;
pub use error::CliError;
