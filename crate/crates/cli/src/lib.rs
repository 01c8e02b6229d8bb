//! Command-line front end for `kickrotor`: configuration, file schemas and
//! the subcommands behind the `kickrotor` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::{Outcome, Status};
pub use config::{Format, Overrides, RunConfig};
pub use error::{CliError, Result};
