//! Run configuration: an optional JSON file provides defaults, command
//! line flags override individual fields, and the effective result is
//! hashed so every artifact records what produced it.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use freqrise_core::models::{BlackBoxModel, ExternalModel, MlpModel, OracleModel};
use freqrise_core::relevance::{ExplainConfig, PostprocessConfig};
use freqrise_core::{SyntheticConfig, TrainConfig};

/// Error class for bad invocations; mapped to exit code 2 in `main`.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Shared configuration file. Every section is optional; a command reads
/// the sections it understands and ignores none (unknown keys are
/// rejected so typos surface instead of silently using defaults).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explain: Option<ExplainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub postprocess: Option<PostprocessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&raw)
            .map_err(|e| usage(format!("bad config {}: {e}", path.display())))
    }

    /// The file's defaults when given, otherwise an empty config.
    pub fn load_opt(path: Option<&PathBuf>) -> Result<Self> {
        path.map(|p| Self::load(p)).unwrap_or_else(|| Ok(RunConfig::default()))
    }
}

/// Hex SHA-256 of a value's canonical JSON form. Struct fields serialize
/// in declaration order, so equal configs hash equally.
pub fn config_digest<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serialization cannot fail");
    hex::encode(Sha256::digest(&json))
}

/// Which classifier a command talks to.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// Closed-form detector built from the dataset's component list.
    Oracle,
    /// Trained network loaded from a file.
    Mlp(PathBuf),
    /// Child process speaking the line-delimited JSON protocol; the
    /// string is the command plus whitespace-separated arguments.
    External(String),
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "oracle" {
            return Ok(ModelSpec::Oracle);
        }
        if let Some(path) = s.strip_prefix("mlp:") {
            if path.is_empty() {
                return Err("mlp: needs a file path".into());
            }
            return Ok(ModelSpec::Mlp(PathBuf::from(path)));
        }
        if let Some(cmd) = s.strip_prefix("external:") {
            if cmd.trim().is_empty() {
                return Err("external: needs a command".into());
            }
            return Ok(ModelSpec::External(cmd.to_string()));
        }
        Err(format!("unknown model spec {s:?}: expected oracle, mlp:PATH, or external:COMMAND"))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Oracle => f.write_str("oracle"),
            ModelSpec::Mlp(path) => write!(f, "mlp:{}", path.display()),
            ModelSpec::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

impl ModelSpec {
    /// Instantiates the model. The oracle derives its detectors from the
    /// dataset the command operates on.
    pub fn build(&self, dataset: &SyntheticConfig) -> Result<Box<dyn BlackBoxModel>> {
        Ok(match self {
            ModelSpec::Oracle => {
                Box::new(OracleModel::new(dataset.components.clone(), dataset.length)?)
            }
            ModelSpec::Mlp(path) => {
                let (model, _tag) = MlpModel::load(path)
                    .with_context(|| format!("loading model {}", path.display()))?;
                Box::new(model)
            }
            ModelSpec::External(cmd) => {
                let mut parts = cmd.split_whitespace();
                let program = parts.next().expect("validated non-empty");
                let args: Vec<String> = parts.map(str::to_owned).collect();
                Box::new(ExternalModel::spawn(program, &args)?)
            }
        })
    }
}

pub fn default_schedule() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).collect()
}
