use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Defaults read from a JSON file; command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Config {
    pub mode: Option<String>,
    pub depth_cap: Option<u32>,
    pub sample_step: Option<String>,
    pub workers: Option<usize>,
    pub lp_grid: Option<usize>,
    pub max_k: Option<usize>,
    pub grid_cube: Option<usize>,
    pub grid_segment: Option<usize>,
    pub node_denominator: Option<u64>,
    pub trial_bound: Option<String>,
    pub max_denominator: Option<u64>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = crate::read_file(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flag if given, else config value, else default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}
