//! Command-line front end for the `surecov` library.

pub mod args;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;

pub use commands::run;
pub use error::{CliError, Result};
