use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Defaults read from a JSON file. Command-line flags take precedence over
/// every field set here.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub n: Option<usize>,
    pub level: Option<usize>,
    pub seed: Option<u64>,
    pub suite: Option<String>,
    pub samples: Option<usize>,
    pub eps_min: Option<f64>,
    pub eps_max: Option<f64>,
    pub points: Option<usize>,
    pub sphere_level: Option<usize>,
    pub family: Option<String>,
    /// Either `log:LO:HI:K` or a comma-separated list.
    pub grid: Option<String>,
    pub out: Option<String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
