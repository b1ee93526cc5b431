//! Deterministic synthetic interview corpus.
//!
//! Feature rows are standard-normal noise except in designated signal
//! slots, whose class-conditional mean is shifted by ±`signal_strength/2`
//! (depression +, normal −) across every column of all three modalities.
//! Slot presence mimics partial attendance: primary-question slots are
//! present with probability 0.9, follow-up slots with probability 0.7,
//! with identical masks across modalities. Everything is a pure function
//! of the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structuring::HierarchicalPosition;
use crate::taxonomy::{QuestionRole, PRIMARY_QUESTION_COUNT};

use super::{
    validate_interview, EmbeddedInterview, Label, Modality, ModalityFeatures, SLOT_COUNT,
};

/// Presence probability for primary-question slots.
pub const PRIMARY_PRESENCE_PROB: f64 = 0.9;
/// Presence probability for follow-up slots.
pub const FOLLOW_UP_PRESENCE_PROB: f64 = 0.7;

/// Corpus generation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_depressed: usize,
    pub n_normal: usize,
    pub seed: u64,
    /// Distance between the two class means on signal rows.
    pub signal_strength: f64,
    /// 1-based slots carrying a plain class-mean shift.
    pub signal_slots: Vec<usize>,
    /// 1-based follow-up slots whose shift sign is additionally flipped
    /// by the parity of the parent topic slot drawn for that interview.
    /// The class signal in these rows is invisible without the parent
    /// metadata.
    pub coupled_follow_up_slots: Vec<usize>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_depressed: 30,
            n_normal: 60,
            seed: 1,
            signal_strength: 4.0,
            signal_slots: vec![10, 20, 30, 40],
            coupled_follow_up_slots: vec![],
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.n_depressed + self.n_normal == 0 {
            return Err(Error::validation("synthetic corpus would be empty"));
        }
        if !self.signal_strength.is_finite() || self.signal_strength < 0.0 {
            return Err(Error::validation("signal_strength must be finite and >= 0"));
        }
        for &s in &self.signal_slots {
            if s == 0 || s > SLOT_COUNT {
                return Err(Error::validation(format!(
                    "signal slot {s} outside 1..={SLOT_COUNT}"
                )));
            }
        }
        for &s in &self.coupled_follow_up_slots {
            if s <= PRIMARY_QUESTION_COUNT || s > SLOT_COUNT {
                return Err(Error::validation(format!(
                    "coupled follow-up slot {s} outside {}..={SLOT_COUNT}",
                    PRIMARY_QUESTION_COUNT + 1
                )));
            }
        }
        Ok(())
    }
}

/// Generate the corpus: depressed interviews first, then normal, ids
/// `synth-0001` onward.
pub fn generate_synthetic_corpus(config: &SyntheticConfig) -> Result<Vec<EmbeddedInterview>> {
    config.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let total = config.n_depressed + config.n_normal;
    let mut out = Vec::with_capacity(total);
    for i in 0..total {
        let label = if i < config.n_depressed {
            Label::Depression
        } else {
            Label::Normal
        };
        let interview_seed: u64 = master.gen();
        let interview = generate_interview(config, i, label, interview_seed)?;
        out.push(interview);
    }
    Ok(out)
}

fn generate_interview(
    config: &SyntheticConfig,
    ordinal: usize,
    label: Label,
    seed: u64,
) -> Result<EmbeddedInterview> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Presence mask, shared by all three modalities.
    let mut present = vec![false; SLOT_COUNT];
    for (k, p) in present.iter_mut().enumerate() {
        let prob = if k < PRIMARY_QUESTION_COUNT {
            PRIMARY_PRESENCE_PROB
        } else {
            FOLLOW_UP_PRESENCE_PROB
        };
        *p = rng.gen_bool(prob);
    }
    // Coupled slots only make sense when present; force them in so the
    // structure-bearing signal actually occurs.
    for &s in &config.coupled_follow_up_slots {
        present[s - 1] = true;
    }

    // Hierarchy metadata and the per-interview parent draw for coupled
    // follow-up slots.
    let mut hierarchy = Vec::new();
    let mut parent_of = vec![0usize; SLOT_COUNT + 1];
    for k in 0..SLOT_COUNT {
        if !present[k] {
            continue;
        }
        let slot = k + 1;
        if slot <= PRIMARY_QUESTION_COUNT {
            hierarchy.push(HierarchicalPosition {
                slot_index: slot,
                role: QuestionRole::Primary,
                effective_topic_slot: slot,
                chain_depth: 0,
                orphan: false,
            });
        } else if config.coupled_follow_up_slots.contains(&slot) {
            let parent = rng.gen_range(1..=PRIMARY_QUESTION_COUNT);
            parent_of[slot] = parent;
            hierarchy.push(HierarchicalPosition {
                slot_index: slot,
                role: QuestionRole::FollowUp,
                effective_topic_slot: parent,
                chain_depth: 1,
                orphan: false,
            });
        } else {
            hierarchy.push(HierarchicalPosition {
                slot_index: slot,
                role: QuestionRole::FollowUp,
                effective_topic_slot: slot,
                chain_depth: 1,
                orphan: true,
            });
        }
    }

    let label_sign = match label {
        Label::Depression => 1.0,
        Label::Normal => -1.0,
    };

    let mut interview = EmbeddedInterview {
        participant_id: format!("synth-{:04}", ordinal + 1),
        label: Some(label),
        audio: ModalityFeatures::empty(Modality::Audio),
        visual: ModalityFeatures::empty(Modality::Visual),
        text: ModalityFeatures::empty(Modality::Text),
        hierarchy,
    };

    for modality in Modality::ALL {
        let features = interview.modality_mut(modality);
        for k in 0..SLOT_COUNT {
            if !present[k] {
                continue;
            }
            let slot = k + 1;
            let shift = if config.signal_slots.contains(&slot) {
                label_sign * config.signal_strength / 2.0
            } else if config.coupled_follow_up_slots.contains(&slot) {
                let parent_sign = if parent_of[slot] % 2 == 1 { 1.0 } else { -1.0 };
                label_sign * parent_sign * config.signal_strength / 2.0
            } else {
                0.0
            };
            let width = features.matrix.ncols();
            for j in 0..width {
                let noise: f64 = StandardNormal.sample(&mut rng);
                features.matrix[(k, j)] = noise + shift;
            }
            features.mask[k] = true;
        }
    }

    validate_interview(&interview)?;
    Ok(interview)
}
