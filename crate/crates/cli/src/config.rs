//! Pipeline configuration: a TOML file given with `--config`, overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use lexswap_core::compose::InterventionPolicy;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub hr_corpus: Option<PathBuf>,
    pub lr_corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub benchmark_embeddings: Option<PathBuf>,
    pub domain_tags: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub k: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub n_init: usize,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self {
            k: 32,
            seed: 0,
            tol: 1e-4,
            max_iter: 300,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconSettings {
    pub source_lang: String,
    pub target_lang: String,
    pub fraction: f64,
    pub seed: u64,
}

impl Default for LexiconSettings {
    fn default() -> Self {
        Self {
            source_lang: "en".into(),
            target_lang: "xx".into(),
            fraction: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub token_budget: u64,
    pub workers: usize,
    /// Documents per output shard.
    pub shard_docs: usize,
    pub paths: Paths,
    pub policy: InterventionPolicy,
    pub cluster: ClusterSettings,
    pub lexicon: LexiconSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            token_budget: 1_000_000,
            workers: 1,
            shard_docs: 100_000,
            paths: Paths::default(),
            policy: InterventionPolicy::default(),
            cluster: ClusterSettings::default(),
            lexicon: LexiconSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    /// Seeds above `i64::MAX` cannot be represented in TOML.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Usage(format!("config cannot be written as TOML: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        if self.shard_docs == 0 {
            return Err(CliError::Usage("shard_docs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Returns the path, or a usage error naming the missing flag.
pub fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    path.as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing required {flag}")))
}

/// Returns the path if it exists on disk, otherwise a usage error naming it.
pub fn existing<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    let p = require(path, flag)?;
    if p.exists() {
        Ok(p)
    } else {
        Err(CliError::Usage(format!("{flag}: input path does not exist: {}", p.display())))
    }
}
