//! Dataset splitting, minority-class augmentation, the optimization
//! loop, and checkpointing.

pub mod augment;
pub mod checkpoint;
pub mod optimizer;
pub mod run;

pub use augment::{augment_minority, SplitRole};
pub use checkpoint::{
    Checkpoint, CheckpointMeta, EpochRecord, SplitMembership, CHECKPOINT_VERSION,
};
pub use optimizer::AdamOptimizer;
pub use run::train;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{EmbeddedInterview, Label, SLOT_COUNT};

/// Fraction of each class assigned to the training partition.
pub const TRAIN_FRACTION: f64 = 0.6;
/// Fraction of each class assigned to the validation partition.
pub const VALIDATION_FRACTION: f64 = 0.2;

/// Optimization hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub seed: u64,
    pub augment: bool,
    pub mask_count: usize,
    pub augment_factor: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 8,
            epochs: 100,
            learning_rate: 2e-4,
            dropout_rate: 0.5,
            seed: 0,
            augment: true,
            mask_count: 10,
            augment_factor: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be at least 1"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::validation(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !self.dropout_rate.is_finite() || !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::validation(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.mask_count > SLOT_COUNT {
            return Err(Error::validation(format!(
                "mask_count {} exceeds the {} question slots",
                self.mask_count, SLOT_COUNT
            )));
        }
        if self.augment_factor == 0 {
            return Err(Error::validation("augment_factor must be at least 1"));
        }
        Ok(())
    }
}

/// The three partitions of a labeled corpus.
#[derive(Debug, Clone)]
pub struct DataSplit {
    pub train: Vec<EmbeddedInterview>,
    pub validation: Vec<EmbeddedInterview>,
    pub test: Vec<EmbeddedInterview>,
}

impl DataSplit {
    /// Partitions must be participant-disjoint and fully labeled.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (name, part) in [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ] {
            for interview in part {
                if !seen.insert(interview.participant_id.clone()) {
                    return Err(Error::validation(format!(
                        "participant {} appears in more than one partition (seen again in {name})",
                        interview.participant_id
                    )));
                }
                if interview.label.is_none() {
                    return Err(Error::validation(format!(
                        "interview {} in the {name} partition has no label",
                        interview.participant_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Participant ids per partition, for checkpoint provenance.
    pub fn membership(&self) -> SplitMembership {
        let ids = |part: &[EmbeddedInterview]| -> Vec<String> {
            part.iter().map(|i| i.participant_id.clone()).collect()
        };
        SplitMembership {
            train: ids(&self.train),
            validation: ids(&self.validation),
            test: ids(&self.test),
        }
    }
}

/// Stratified 60/20/20 split: each class is shuffled (seeded) and cut
/// independently so both partitions preserve the class ratio.
pub fn split_corpus(corpus: &[EmbeddedInterview], seed: u64) -> Result<DataSplit> {
    if corpus.is_empty() {
        return Err(Error::validation("cannot split an empty corpus"));
    }
    let mut ids = BTreeSet::new();
    for interview in corpus {
        if interview.label.is_none() {
            return Err(Error::validation(format!(
                "interview {} has no label; splits require labeled data",
                interview.participant_id
            )));
        }
        if !ids.insert(interview.participant_id.clone()) {
            return Err(Error::validation(format!(
                "duplicate participant id {}",
                interview.participant_id
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = DataSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for class in [Label::Normal, Label::Depression] {
        let mut members: Vec<&EmbeddedInterview> = corpus
            .iter()
            .filter(|i| i.label == Some(class))
            .collect();
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = (n as f64 * TRAIN_FRACTION).round() as usize;
        let n_val = ((n as f64 * VALIDATION_FRACTION).round() as usize).min(n - n_train);
        for (k, interview) in members.into_iter().enumerate() {
            if k < n_train {
                split.train.push(interview.clone());
            } else if k < n_train + n_val {
                split.validation.push(interview.clone());
            } else {
                split.test.push(interview.clone());
            }
        }
    }
    split.validate()?;
    Ok(split)
}
