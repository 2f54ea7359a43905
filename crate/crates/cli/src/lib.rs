//! Configuration-driven batch jobs over `gangolli-core`.

pub mod commands;
pub mod config;

pub use commands::{Check, Command, Job, Outcome, OutputFile};
pub use config::{ConfigError, JobConfig, LoadedConfig};
