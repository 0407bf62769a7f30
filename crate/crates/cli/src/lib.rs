//! Experiment runner for `marl-lab`: TOML configs, figure presets and
//! dataset writers.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{parse_config, ConfigError, ExperimentConfig, Format, Mode};
pub use presets::{preset, PRESETS};
pub use runner::run_experiment;
