//! Optional TOML run configuration. Every key mirrors a command-line flag;
//! flags take precedence.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub degree: Option<usize>,
    pub seed: Option<String>,
    pub rng_seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub damping: Option<f64>,
    pub amplitude: Option<f64>,
    pub quad_points: Option<usize>,
    pub attempts: Option<usize>,
    pub group: Option<String>,
    pub l_cut: Option<usize>,
    pub p: Option<usize>,
    pub precision: Option<u32>,
    pub sup_samples: Option<[usize; 2]>,
    pub gap_samples: Option<[usize; 2]>,
    pub r_grid: Option<Vec<f64>>,
    pub digits: Option<usize>,
    pub ntheta: Option<usize>,
    pub nphi: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
