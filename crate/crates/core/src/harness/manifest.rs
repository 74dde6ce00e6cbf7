use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::agent::ObsNormalizer;

pub const MANIFEST_FORMAT: &str = "risvec-manifest";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.cfg";

/// Written beside every set of run outputs. Holds everything needed to
/// rerun: the resolved configuration text, its hash, the seeds and the tool
/// version. No timestamps, so reruns produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub sweep: String,
    pub values: Vec<f64>,
    pub methods: Vec<String>,
    /// Observation scaling used by the agent, when one was involved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<ObsNormalizer>,
    pub files: Vec<String>,
    pub config: String,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: cfg.hash(),
            seeds: cfg.experiment.seeds.clone(),
            sweep: cfg.experiment.sweep.name().to_string(),
            values: cfg.experiment.values.clone(),
            methods: cfg.experiment.methods.iter().map(|m| m.name().to_string()).collect(),
            normalizer: None,
            files: Vec::new(),
            config: cfg.to_ini(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let m: Self = serde_json::from_str(text)?;
        if m.format != MANIFEST_FORMAT {
            return Err(HarnessError::Invalid {
                field: "manifest.format".into(),
                message: format!("expected `{MANIFEST_FORMAT}`, got `{}`", m.format),
            });
        }
        Ok(m)
    }

    /// Writes `manifest.json` and `config.cfg` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        super::write_file(&dir.join(MANIFEST_FILE), text.as_bytes())?;
        super::write_file(&dir.join(CONFIG_FILE), self.config.as_bytes())
    }
}
