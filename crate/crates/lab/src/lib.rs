//! Experiment runner for `ratelab-core`: TOML configs, parallel ensembles,
//! trajectory and curve files, and the `ratelab` command line.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod formats;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
pub use experiment::{run, write_artifacts, Experiment, ExperimentReport};
