//! Command-line front end: scenario files, exports and run manifests.

pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

pub use config::{canonical_file, ScenarioFile};
pub use error::{exit_code, CliError, EXIT_USAGE};
