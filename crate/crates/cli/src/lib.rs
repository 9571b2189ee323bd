//! Experiment driver for the `sparseness` crate.
//!
//! The `sparseness` binary is a thin wrapper around [`cli::run`]; the
//! experiment runners in [`bench`] and [`train`] are also usable directly.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod project;
pub mod table;
pub mod train;

pub use error::{CliError, Result};
