//! Run configuration: the TOML file format and seed resolution.

use std::path::Path;

use interq_core::features::prep::QuestionEmbedding;
use interq_core::features::synthetic::SyntheticConfig;
use interq_core::model::ModelConfig;
use interq_core::training::TrainConfig;
use interq_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Environment variable consulted for the seed when neither `--seed`
/// nor the config file sets one.
pub const SEED_ENV_VAR: &str = "INTERQ_SEED";

/// Dataset handling knobs that sit outside the model and the trainer.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// How question identity and structure are presented to the model.
    pub question_embedding: QuestionEmbedding,
    /// Seed for the train/validation/test partition; defaults to the
    /// run seed so one number reproduces the whole run.
    pub split_seed: Option<u64>,
}

/// Everything a config file can set.  Every section and field is
/// optional; omitted values take the built-in defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub data: DataConfig,
    pub synthesis: SyntheticConfig,
}

/// Resolved per-invocation settings shared by every command.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: FileConfig,
    /// Effective run seed (precedence: `--seed`, then an explicit
    /// `training.seed` in the config file, then `INTERQ_SEED`, then 0).
    pub seed: u64,
    pub verbose: bool,
}

impl Settings {
    /// Training parameters with the resolved seed applied.
    pub fn train_config(&self) -> TrainConfig {
        let mut tc = self.config.training.clone();
        tc.seed = self.seed;
        tc
    }

    /// Corpus generation parameters with the resolved seed applied.
    pub fn synthetic_config(&self) -> SyntheticConfig {
        let mut sc = self.config.synthesis.clone();
        sc.seed = self.seed;
        sc
    }

    /// Seed for the data partition.
    pub fn split_seed(&self) -> u64 {
        self.config.data.split_seed.unwrap_or(self.seed)
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parse a config file, remembering whether it set a seed explicitly.
fn load_file(path: &Path) -> Result<(FileConfig, Option<u64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let config: FileConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.span().map(|s| line_of_offset(&text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    // A defaulted `training.seed` of 0 is indistinguishable from an
    // explicit one after deserialization, so check the raw document.
    let raw: toml::Value = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.message().to_string(),
    })?;
    let explicit_seed = raw
        .get("training")
        .and_then(|t| t.get("seed"))
        .and_then(|v| v.as_integer())
        .map(|v| v as u64);
    Ok((config, explicit_seed))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw.trim().parse::<u64>().map(Some).map_err(|_| {
            Error::validation(format!(
                "{SEED_ENV_VAR} must be an unsigned integer, got {raw:?}"
            ))
        }),
        Err(_) => Ok(None),
    }
}

/// Build the per-invocation settings from the global flags.
pub fn load_settings(
    config_path: Option<&Path>,
    cli_seed: Option<u64>,
    verbose: bool,
) -> Result<Settings> {
    let (config, file_seed) = match config_path {
        Some(path) => load_file(path)?,
        None => (FileConfig::default(), None),
    };
    let seed = match cli_seed.or(file_seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    Ok(Settings { config, seed, verbose })
}
