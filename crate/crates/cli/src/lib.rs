//! Command-line driver for the `gknn` engine.

pub mod commands;
pub mod error;
pub mod formats;

pub use error::{CliError, CliResult};
