//! Batch front-end of the revheat toolkit: reproducible experiments driven by
//! a `key = value` configuration, emitting JSON, CSV and SVG artifacts.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, Outcome};
pub use config::{Command, ExperimentConfig, InvalidConfig};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "REVHEAT_THREADS";
