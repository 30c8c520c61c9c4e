//! Configuration, output formats and experiment drivers for the `rotators`
//! command-line tool.

pub mod config;
pub mod error;
pub mod oracle_run;
pub mod output;
pub mod presets;
pub mod run;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
