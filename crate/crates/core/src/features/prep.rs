//! Data-level preparation applied just before interviews enter the
//! network, realizing the question-embedding ablation axis:
//!
//! * `WholeInterview` — discard the question structure entirely by
//!   averaging all present rows into a single slot.
//! * `Flat` — keep the per-question slots but add no structural signal.
//! * `Hierarchical` — add a deterministic encoding of each slot's
//!   effective topic and chain depth to its feature rows, so follow-ups
//!   carry their parent's identity into the sequence.
//!
//! Preparation runs after augmentation: augmentation masks slots by
//! zeroing rows, and the hierarchy encoding must not resurrect them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::structuring::HierarchicalPosition;

use super::{validate_interview, EmbeddedInterview, Modality, SLOT_COUNT};

/// Scale of the additive structural encoding relative to the features.
pub const HIERARCHY_ENCODING_SCALE: f64 = 0.5;

/// How question identity and structure are presented to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuestionEmbedding {
    /// Collapse the interview to one averaged slot (structure removed).
    WholeInterview,
    /// Keep per-question slots without structural encoding.
    Flat,
    /// Per-question slots plus topic/depth encoding (full treatment).
    #[default]
    Hierarchical,
}

impl std::fmt::Display for QuestionEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            QuestionEmbedding::WholeInterview => "whole_interview",
            QuestionEmbedding::Flat => "flat",
            QuestionEmbedding::Hierarchical => "hierarchical",
        };
        f.write_str(s)
    }
}

/// Deterministic pseudo-embedding: hash (kind tag, value) to a seed,
/// expand to a uniform(-1, 1) vector of the requested width.
fn structural_vector(kind: u64, value: usize, dim: usize) -> Vec<f64> {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x1000_0000_01b3;
    let mut h = FNV_OFFSET;
    for byte in kind.to_le_bytes() {
        h = (h ^ byte as u64).wrapping_mul(FNV_PRIME);
    }
    for byte in (value as u64).to_le_bytes() {
        h = (h ^ byte as u64).wrapping_mul(FNV_PRIME);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

const KIND_TOPIC: u64 = 1;
const KIND_DEPTH: u64 = 2;

/// Prepare one interview for the model under the chosen embedding mode.
/// The input is left untouched; a transformed copy is returned.
pub fn prepare_interview(
    interview: &EmbeddedInterview,
    mode: QuestionEmbedding,
) -> Result<EmbeddedInterview> {
    let mut out = interview.clone();
    match mode {
        QuestionEmbedding::Flat => {}
        QuestionEmbedding::Hierarchical => apply_hierarchy_encoding(&mut out),
        QuestionEmbedding::WholeInterview => collapse_to_single_slot(&mut out),
    }
    validate_interview(&out)?;
    Ok(out)
}

/// Prepare a whole corpus.
pub fn prepare_corpus(
    corpus: &[EmbeddedInterview],
    mode: QuestionEmbedding,
) -> Result<Vec<EmbeddedInterview>> {
    corpus.iter().map(|iv| prepare_interview(iv, mode)).collect()
}

fn apply_hierarchy_encoding(interview: &mut EmbeddedInterview) {
    let hierarchy: Vec<HierarchicalPosition> = interview.hierarchy.clone();
    for modality in Modality::ALL {
        let features = interview.modality_mut(modality);
        let dim = features.matrix.ncols();
        for pos in &hierarchy {
            let k = pos.slot_index - 1;
            // Augmentation may have masked this slot after structuring;
            // never write into a masked row.
            if !features.mask[k] {
                continue;
            }
            let topic = structural_vector(KIND_TOPIC, pos.effective_topic_slot, dim);
            let depth = structural_vector(KIND_DEPTH, pos.chain_depth, dim);
            for j in 0..dim {
                features.matrix[(k, j)] += HIERARCHY_ENCODING_SCALE * (topic[j] + depth[j]);
            }
        }
    }
}

fn collapse_to_single_slot(interview: &mut EmbeddedInterview) {
    for modality in Modality::ALL {
        let features = interview.modality_mut(modality);
        let dim = features.matrix.ncols();
        let present: Vec<usize> = (0..SLOT_COUNT).filter(|&k| features.mask[k]).collect();
        let mut mean = vec![0.0; dim];
        if !present.is_empty() {
            for &k in &present {
                for j in 0..dim {
                    mean[j] += features.matrix[(k, j)];
                }
            }
            for v in &mut mean {
                *v /= present.len() as f64;
            }
        }
        features.matrix.fill(0.0);
        features.mask.fill(false);
        if !present.is_empty() {
            for j in 0..dim {
                features.matrix[(0, j)] = mean[j];
            }
            features.mask[0] = true;
        }
    }
    // The collapsed slot stands for the whole interview; report it as a
    // single top-level position.
    interview.hierarchy = vec![HierarchicalPosition {
        slot_index: 1,
        role: crate::taxonomy::QuestionRole::Primary,
        effective_topic_slot: 1,
        chain_depth: 0,
        orphan: false,
    }];
}
