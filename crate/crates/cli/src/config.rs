use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use delineate_core::augment::AugmentationConfig;
use delineate_core::eval::EvaluationConfig;
use delineate_core::network::{NetworkConfig, TrainerConfig};
use delineate_core::synth::GenerationConfig;

use crate::UsageError;

/// Default locations; command-line flags win over these.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub pool: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    /// `record_id,subject_id` rows overriding the id-prefix convention.
    pub subjects: Option<PathBuf>,
}

/// Optional per-stage seeds. `--seed` replaces all of them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub generation: Option<u64>,
    pub augmentation: Option<u64>,
    pub trainer: Option<u64>,
    pub split: Option<u64>,
}

/// Whole-run configuration file. Every section is optional and every key
/// defaults to the library default; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generation: GenerationConfig,
    pub augmentation: AugmentationConfig,
    pub network: NetworkConfig,
    pub trainer: TrainerConfig,
    pub evaluation: EvaluationConfig,
    pub paths: Paths,
    pub seeds: Seeds,
}

pub const DEFAULT_SPLIT_SEED: u64 = 123_456;

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(RunConfig::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }

    /// Applies the `[seeds]` section, then the command-line seed.
    pub fn resolve_seeds(&mut self, cli_seed: Option<u64>) {
        let s = self.seeds.clone();
        if let Some(v) = s.generation {
            self.generation.rng_seed = v;
        }
        if let Some(v) = s.augmentation {
            self.augmentation.rng_seed = v;
        }
        if let Some(v) = s.trainer {
            self.trainer.seed = v;
        }
        if let Some(seed) = cli_seed {
            self.generation.rng_seed = seed;
            self.augmentation.rng_seed = seed;
            self.trainer.seed = seed;
            self.seeds = Seeds { generation: Some(seed), augmentation: Some(seed), trainer: Some(seed), split: Some(seed) };
        }
    }

    pub fn split_seed(&self) -> u64 {
        self.seeds.split.unwrap_or(DEFAULT_SPLIT_SEED)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.generation.validate()?;
        self.augmentation.validate(self.generation.target_fs)?;
        self.network.validate()?;
        self.trainer.validate()?;
        Ok(())
    }
}
