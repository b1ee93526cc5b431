//! Versioned, round-trip-stable checkpoint files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::prep::QuestionEmbedding;
use crate::model::{ModelConfig, NetworkTopology, ParamStore};

/// Bumped whenever the serialized layout changes.
pub const CHECKPOINT_VERSION: u32 = 1;

/// One epoch's scores, recorded during training.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_macro_f1: f64,
}

/// Which participant ids landed in which partition.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct SplitMembership {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

/// Provenance recorded alongside the weights.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_macro_f1: f64,
    pub history: Vec<EpochRecord>,
    pub split: SplitMembership,
}

/// Everything needed to re-run the model exactly: configuration,
/// topology, the question-embedding mode the weights were trained
/// under, the weights themselves, and training provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model_config: ModelConfig,
    pub topology: NetworkTopology,
    pub question_embedding: QuestionEmbedding,
    pub params: ParamStore,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    /// Serialize to `path` atomically (temp file + rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)
                    .map_err(|e| Error::io(parent.display().to_string(), e))?;
            }
        }
        let bytes = bincode::serialize(self).map_err(|e| Error::CorruptArtifact {
            path: path.display().to_string(),
            message: format!("serialization failed: {e}"),
        })?;
        let tmp = path.with_extension("ckpt.tmp");
        fs::write(&tmp, &bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let checkpoint: Checkpoint =
            bincode::deserialize(&bytes).map_err(|e| Error::CorruptArtifact {
                path: path.display().to_string(),
                message: format!("deserialization failed: {e}"),
            })?;
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(Error::CorruptArtifact {
                path: path.display().to_string(),
                message: format!(
                    "checkpoint version {} but this build reads version {}",
                    checkpoint.version, CHECKPOINT_VERSION
                ),
            });
        }
        checkpoint.model_config.validate()?;
        checkpoint.topology.validate()?;
        Ok(checkpoint)
    }
}
