use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Record of one invocation: enough to rerun it and find what it wrote.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub args: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_path: &str, seed: u64, outputs: Vec<PathBuf>) -> Self {
        Self {
            command: command.to_owned(),
            config_path: config_path.to_owned(),
            seed,
            outputs,
            tool_version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            args: std::env::args().skip(1).collect(),
        }
    }
}
