//! Batch runner for waveform design scenarios.

pub mod config;
pub mod emit;
pub mod runner;
pub mod validate;

pub use config::{ConfigError, Method, ScenarioConfig};
pub use runner::{run_scenario, RunManifest, RunOptions};
pub use validate::validate_dir;
