//! Run manifest written next to every set of outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioFile;
use crate::error::CliError;
use crate::output::write_json;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name.
    pub args: Vec<String>,
    pub config_path: Option<String>,
    pub seed: Option<u64>,
    /// RFC 3339, UTC.
    pub timestamp: String,
    /// Resolved scenario, in scenario-file units.
    pub scenario: Option<ScenarioFile>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config_path: Option<&Path>, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            config_path: config_path.map(|p| p.display().to_string()),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            scenario: None,
        }
    }

    pub fn with_scenario(mut self, scenario: &ScenarioFile) -> Self {
        self.scenario = Some(scenario.clone());
        self
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        write_json(&out_dir.join(MANIFEST_FILE), self)
    }
}
