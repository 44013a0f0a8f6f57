//! File formats, configuration and experiment drivers around `curvinit-core`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod idx;
pub mod netfmt;
pub mod table;

pub use error::{CliError, CliResult};
