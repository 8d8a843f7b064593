//! The self-describing run configuration: one JSON file drives every
//! subcommand, with command-line flags overriding the output directory,
//! seed, and determinism.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{AgreementLevel, SliceDimension};
use crate::error::{Error, Result};
use crate::judge::client::EndpointConfig;
use crate::judge::runner::{RetryPolicy, SamplingConfig};
use crate::judge::prompt::TemplateFlavor;
use crate::model::{ModelId, Paradigm, ScoreMode};
use crate::sim::SimScenario;

pub const CONFIG_SCHEMA: &str = "config/v1";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub logs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub paradigm: Paradigm,
    #[serde(default)]
    pub flavor: TemplateFlavor,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
}

fn default_concurrency() -> usize {
    4
}

/// Everything a run can need. Each command validates just the fields it
/// uses and names the gaps it finds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default)]
    pub paths: ConfigPaths,
    #[serde(default)]
    pub judges: Vec<ModelId>,
    #[serde(default)]
    pub generators: Vec<ModelId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub committee: Vec<ModelId>,
    #[serde(default)]
    pub score_mode: ScoreMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slices: Vec<SliceDimension>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub agreement_level: AgreementLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<SimScenario>,
    #[serde(default)]
    pub deterministic: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(RunConfig, String)> {
        let bytes = std::fs::read(path).map_err(|e| {
            Error::Config(format!("cannot read config '{}': {e}", path.display()))
        })?;
        let config: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("malformed config '{}': {e}", path.display())))?;
        if config.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "config schema '{}' is not '{CONFIG_SCHEMA}'",
                config.schema
            )));
        }
        let hash = {
            use sha2::{Digest, Sha256};
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            hex::encode(hasher.finalize())
        };
        Ok((config, hash))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn require_dataset(&self) -> Result<&Path> {
        self.paths
            .dataset
            .as_deref()
            .ok_or_else(|| Error::Config("config is missing paths.dataset".into()))
    }

    pub fn require_outputs(&self) -> Result<&Path> {
        self.paths
            .outputs
            .as_deref()
            .ok_or_else(|| Error::Config("config is missing paths.outputs".into()))
    }

    pub fn require_registry(&self) -> Result<&Path> {
        self.paths
            .registry
            .as_deref()
            .ok_or_else(|| Error::Config("config is missing paths.registry".into()))
    }

    pub fn require_reference(&self) -> Result<&Path> {
        self.paths
            .reference
            .as_deref()
            .ok_or_else(|| Error::Config("config is missing paths.reference".into()))
    }

    pub fn require_logs(&self) -> Result<&[PathBuf]> {
        if self.paths.logs.is_empty() {
            Err(Error::Config("config is missing paths.logs".into()))
        } else {
            Ok(&self.paths.logs)
        }
    }

    pub fn require_plan(&self) -> Result<&PlanConfig> {
        self.plan
            .as_ref()
            .ok_or_else(|| Error::Config("config is missing the judging plan".into()))
    }

    pub fn require_scenario(&self) -> Result<&SimScenario> {
        self.scenario
            .as_ref()
            .ok_or_else(|| Error::Config("config is missing the simulation scenario".into()))
    }
}
