//! Class-balancing augmentation by random question masking.
//!
//! Depression-labeled interviews are the minority class; each one is
//! copied `augment_factor - 1` extra times, and every copy hides a
//! fresh random set of `mask_count` questions by zeroing those slots'
//! rows in all three modality matrices and clearing their masks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{validate_interview, EmbeddedInterview, Label, Modality};

use super::TrainConfig;

/// Which partition a set of interviews belongs to. Augmentation is
/// only legal on the training partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Validation,
    Test,
}

impl std::fmt::Display for SplitRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitRole::Train => write!(f, "train"),
            SplitRole::Validation => write!(f, "validation"),
            SplitRole::Test => write!(f, "test"),
        }
    }
}

/// Expand the minority class by random question masking.
///
/// Each depression-labeled interview is followed by
/// `augment_factor - 1` masked copies; originals are retained and
/// normal-labeled interviews pass through unchanged. Every copy
/// draws `mask_count` distinct slots (from the slots present in all
/// three modalities, so each draw genuinely removes a question) and
/// zeroes them everywhere.
pub fn augment_minority(
    train_set: &[EmbeddedInterview],
    role: SplitRole,
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<EmbeddedInterview>> {
    if role != SplitRole::Train {
        return Err(Error::validation(format!(
            "augmentation requested on the {role} split; only the train split may be augmented"
        )));
    }
    config.validate()?;
    for interview in train_set {
        if interview.label.is_none() {
            return Err(Error::validation(format!(
                "cannot augment unlabeled interview {}",
                interview.participant_id
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(train_set.len());
    for interview in train_set {
        out.push(interview.clone());
        if interview.label != Some(Label::Depression) {
            continue;
        }
        for copy_index in 1..config.augment_factor {
            out.push(masked_copy(interview, copy_index, config.mask_count, &mut rng)?);
        }
    }
    Ok(out)
}

fn masked_copy(
    source: &EmbeddedInterview,
    copy_index: usize,
    mask_count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EmbeddedInterview> {
    let candidates = source.jointly_present_slots();
    if candidates.len() < mask_count {
        return Err(Error::validation(format!(
            "interview {} has only {} jointly present slots; cannot mask {}",
            source.participant_id,
            candidates.len(),
            mask_count
        )));
    }
    let chosen = rand::seq::index::sample(rng, candidates.len(), mask_count);
    let mut copy = source.clone();
    copy.participant_id = format!("{}-aug{}", source.participant_id, copy_index);
    for pick in chosen.iter() {
        let slot = candidates[pick];
        for m in Modality::ALL {
            let features = copy.modality_mut(m);
            features.matrix.row_mut(slot - 1).fill(0.0);
            features.mask[slot - 1] = false;
        }
        copy.hierarchy.retain(|h| h.slot_index != slot);
    }
    validate_interview(&copy)?;
    Ok(copy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::synthetic::{generate_synthetic_corpus, SyntheticConfig};

    fn small_corpus() -> Vec<EmbeddedInterview> {
        generate_synthetic_corpus(&SyntheticConfig {
            n_depressed: 3,
            n_normal: 4,
            seed: 7,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    fn differing_slots(a: &EmbeddedInterview, b: &EmbeddedInterview, m: Modality) -> Vec<usize> {
        (0..crate::features::SLOT_COUNT)
            .filter(|&k| a.modality(m).matrix.row(k) != b.modality(m).matrix.row(k))
            .map(|k| k + 1)
            .collect()
    }

    #[test]
    fn triples_the_minority_and_keeps_normals() {
        let corpus = small_corpus();
        let config = TrainConfig::default();
        let out = augment_minority(&corpus, SplitRole::Train, &config, 5).unwrap();
        let depressed = out
            .iter()
            .filter(|i| i.label == Some(Label::Depression))
            .count();
        let normal = out.iter().filter(|i| i.label == Some(Label::Normal)).count();
        assert_eq!(depressed, 3 * config.augment_factor);
        assert_eq!(normal, 4);
        // Originals retained verbatim, in order.
        for source in &corpus {
            assert!(out
                .iter()
                .any(|i| i.participant_id == source.participant_id));
        }
    }

    #[test]
    fn each_copy_differs_in_exactly_mask_count_slots_per_modality() {
        let corpus = small_corpus();
        let config = TrainConfig::default();
        let out = augment_minority(&corpus, SplitRole::Train, &config, 5).unwrap();
        for copy in out.iter().filter(|i| i.participant_id.contains("-aug")) {
            let source_id = copy.participant_id.split("-aug").next().unwrap();
            let source = corpus
                .iter()
                .find(|i| i.participant_id == source_id)
                .unwrap();
            let audio = differing_slots(source, copy, Modality::Audio);
            let visual = differing_slots(source, copy, Modality::Visual);
            let text = differing_slots(source, copy, Modality::Text);
            assert_eq!(audio.len(), config.mask_count);
            assert_eq!(audio, visual);
            assert_eq!(audio, text);
            for &slot in &audio {
                for m in Modality::ALL {
                    assert!(!copy.modality(m).mask[slot - 1]);
                    assert!(copy.modality(m).matrix.row(slot - 1).iter().all(|&v| v == 0.0));
                }
                assert!(copy.hierarchy.iter().all(|h| h.slot_index != slot));
            }
        }
    }

    #[test]
    fn factor_one_is_identity() {
        let corpus = small_corpus();
        let config = TrainConfig {
            augment_factor: 1,
            ..TrainConfig::default()
        };
        let out = augment_minority(&corpus, SplitRole::Train, &config, 5).unwrap();
        assert_eq!(out.len(), corpus.len());
        for (a, b) in corpus.iter().zip(&out) {
            assert_eq!(a.participant_id, b.participant_id);
            assert_eq!(a.audio.matrix, b.audio.matrix);
        }
    }

    #[test]
    fn non_train_split_is_rejected() {
        let corpus = small_corpus();
        let config = TrainConfig::default();
        for role in [SplitRole::Validation, SplitRole::Test] {
            let err = augment_minority(&corpus, role, &config, 5).unwrap_err();
            assert!(err.to_string().contains("only the train split"));
        }
    }

    #[test]
    fn copies_are_seed_deterministic_and_seed_sensitive() {
        let corpus = small_corpus();
        let config = TrainConfig::default();
        let a = augment_minority(&corpus, SplitRole::Train, &config, 5).unwrap();
        let b = augment_minority(&corpus, SplitRole::Train, &config, 5).unwrap();
        let c = augment_minority(&corpus, SplitRole::Train, &config, 6).unwrap();
        assert_eq!(
            bincode::serialize(&a).unwrap(),
            bincode::serialize(&b).unwrap()
        );
        assert_ne!(
            bincode::serialize(&a).unwrap(),
            bincode::serialize(&c).unwrap()
        );
    }

    #[test]
    fn unlabeled_interviews_are_rejected() {
        let mut corpus = small_corpus();
        corpus[0].label = None;
        let err =
            augment_minority(&corpus, SplitRole::Train, &TrainConfig::default(), 5).unwrap_err();
        assert!(err.to_string().contains("unlabeled"));
    }
}
