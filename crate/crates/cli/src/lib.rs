//! Experiment runner: configuration, the report format, and the run itself.

pub mod config;
pub mod report;
pub mod run;

pub use config::{validate_config, ConfigError, ExperimentConfig, Overrides};
pub use run::{run_experiment, RunOutcome, EXIT_CERTIFICATE, EXIT_CONFIG, EXIT_PASS};
