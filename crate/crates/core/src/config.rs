use serde::{Deserialize, Serialize};

use crate::smoothing::{DEFAULT_GRID_MAX_PERCENT, DEFAULT_LAMBDA};

/// Pool size per class as a multiple of the per-class budget.
pub const DEFAULT_POOL_FACTOR: u64 = 5;

/// Settings of one command invocation, copied into every report it writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub lambda: f64,
    pub pool_factor: u64,
    pub grid_max_percent: u32,
    pub seed: u64,
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ipc: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deficit_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_gui: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_stop: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl RunConfig {
    pub fn new(command: impl Into<String>) -> Self {
        RunConfig {
            command: command.into(),
            lambda: DEFAULT_LAMBDA,
            pool_factor: DEFAULT_POOL_FACTOR,
            grid_max_percent: DEFAULT_GRID_MAX_PERCENT,
            seed: 0,
            shape: "scale".to_string(),
            ipc: None,
            strategy: None,
            deficit_rule: None,
            smoothing: None,
            lambda_gui: None,
            t_stop: None,
            steps: None,
        }
    }
}
