//! Library side of the `pdae-lab` command-line tool.

pub mod commands;
pub mod error;
pub mod expr;
pub mod model;
pub mod output;
pub mod summary;

pub use error::CliError;
