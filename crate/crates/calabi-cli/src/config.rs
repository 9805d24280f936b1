//! Optional JSON config file shared by all subcommands. Precedence is
//! command-line flags, then file values, then built-in defaults; every
//! command prints the merged result it actually ran with.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<u32>,
    pub y0: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub threshold: Option<f64>,
    pub max_steps: Option<usize>,
    pub experimental: Option<bool>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub radius: Option<f64>,
    pub step: Option<f64>,
    pub bins: Option<usize>,
    pub k_lo: Option<f64>,
    pub k_hi: Option<f64>,
    pub lambda: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }
}

/// Flag value wins over config-file value, which wins over the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
