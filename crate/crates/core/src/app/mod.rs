//! Config-driven batch commands behind the `bsvie` binary.

pub mod commands;
pub mod config;
mod output;

pub use commands::{run, AppError, Command, Outcome, RunOptions, OUT_DIR_ENV, SCHEMA_VERSION};
pub use config::{ConfigError, ScenarioConfig};
