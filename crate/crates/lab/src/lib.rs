//! Batch studies for `sqg-core`: the `key = value` run configuration, CSV
//! artifacts, invariant checks and the subcommands of the `sqg` binary.

pub mod artifacts;
pub mod checks;
pub mod commands;
pub mod config;
pub mod summary;

pub use commands::{run, Command};
pub use config::{ConfigError, RunConfig};
pub use summary::{Check, Status, Summary};
