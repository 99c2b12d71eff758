//! Command-line front end for `stable-varma`: CSV and JSON model files, the
//! `simulate`, `fit`, `roots`, `forecast` and `bench` subcommands, and the
//! Monte Carlo benchmark runner.

pub mod bench;
pub mod commands;
pub mod error;
pub mod io;
pub mod model_file;

pub use commands::{run, Cli, Command};
pub use error::{CliError, CliResult};
