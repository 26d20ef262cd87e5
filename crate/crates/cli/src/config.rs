use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Master seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Everything a run was invoked with; echoed into every summary artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub m: Option<u64>,
    pub k: Option<u32>,
    pub trials: Option<u64>,
    pub x: Option<f64>,
    pub master_seed: u64,
    /// Mode switches that were on, e.g. `hazard`, `lazy`, `diag`.
    pub modes: Vec<String>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    /// `None` means the available parallelism.
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn new(command: &str, master_seed: u64) -> Self {
        RunConfig {
            command: command.to_string(),
            m: None,
            k: None,
            trials: None,
            x: None,
            master_seed,
            modes: Vec::new(),
            out: None,
            csv: None,
            workers: None,
        }
    }
}
