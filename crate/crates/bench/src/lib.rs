//! Command-line benchmark driver for the `multistep` forecasting library.

pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod run;

pub use config::{Cli, RunConfig};
pub use error::{BenchError, BenchResult};
pub use run::{run, RunOutcome, EXIT_FATAL, EXIT_PARTIAL, EXIT_SUCCESS};
