use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use frokaweil_core::experiments::Configuration;
use frokaweil_core::MatrixTuple;
use serde::Deserialize;

/// Values read from `--config`. Every key is optional; command-line flags
/// take precedence over the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub tol: Option<f64>,

    pub poly: Option<String>,
    pub d: Option<usize>,
    pub point: Option<MatrixTuple>,
    pub level: Option<usize>,
    pub margin: Option<f64>,
    pub shape: Option<String>,
    pub configuration: Option<Configuration>,

    pub points: Option<usize>,
    pub synth_cases: Option<usize>,
    pub terms: Option<usize>,
    pub r: Option<f64>,
    pub hull: Option<usize>,
    pub convergence: Option<bool>,
    pub n_list: Option<Vec<usize>>,
    pub witnesses: Option<usize>,
    pub trials: Option<usize>,
    pub r_list: Option<Vec<f64>>,
    pub samples: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// First present value: flag, then file, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
