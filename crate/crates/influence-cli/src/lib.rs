//! Library surface of the command-line harness, exposed so integration
//! tests can drive the same code paths as the binary.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod csvio;

pub use commands::CliError;
