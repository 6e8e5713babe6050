use std::path::Path;

use losguide::{Outcome, SimError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error in {file}: {message}")]
    Schema { file: String, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Process exit status for a finished single-trial run.
pub fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Intercept => 0,
        Outcome::Miss => 10,
        Outcome::Timeout => 11,
        Outcome::Singularity => 12,
        Outcome::Divergence => 13,
    }
}

/// Exit status for configuration, I/O and schema errors.
pub const EXIT_USAGE: i32 = 2;
