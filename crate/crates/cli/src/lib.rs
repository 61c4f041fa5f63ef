//! Experiment runner for the hopping-leg simulator: configuration files,
//! presets and the commands behind the `hopleg` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{CliError, Comparison, RunReport};
pub use config::{parse_config, parse_config_str, ConfigError, RunConfig, PRESETS};
