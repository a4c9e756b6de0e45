//! Configuration-driven verification runs over `dyadic-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod suites;

pub use config::ExperimentConfig;
pub use error::LabError;
pub use suites::{run_suite, Outcome, Suite};
