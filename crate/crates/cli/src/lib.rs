//! Batch runner for daqsim protocols: TOML configs in, CSV/JSON series and summaries out.

pub mod config;
pub mod error;
pub mod observables;
pub mod output;
pub mod protocols;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use protocols::Protocol;
pub use run::{run, run_file, Command, RunReport};
