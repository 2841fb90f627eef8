//! Configuration, tables and subcommands behind the `lre` binary.

pub mod config;
pub mod run;
pub mod table;

pub use config::{parse_config, ConfigError, Engine, RunConfig};
pub use run::{RunError, RunResult};
pub use table::OutputTable;
