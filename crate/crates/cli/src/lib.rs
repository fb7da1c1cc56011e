//! Command-line front end for the DQBC interpolation pipeline: image and
//! flow-visualisation I/O, motion fitting, benchmarks and the subcommands.

pub mod bench;
pub mod commands;
pub mod error;
pub mod fit;
pub mod flowviz;
pub mod image_io;

pub use error::{CliError, CliResult};
