//! Config-driven front end for `cpf-core`: JSON experiment configs in, CSV
//! tables and JSON run manifests out.

pub mod compare;
pub mod config;
pub mod engine;
pub mod error;
pub mod output;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use output::{evaluate, run_experiment};
