//! Scoring a trained checkpoint against labeled interviews.

use crate::error::{Error, Result};
use crate::features::prep::{prepare_corpus, prepare_interview};
use crate::features::{EmbeddedInterview, Label};
use crate::model::{GraphBuilder, InterviewForward, NetworkInput};
use crate::training::Checkpoint;

use super::metrics::{compute_metrics, Metrics};

/// Forward one prepared interview under a checkpoint's weights.
/// Returns the forward handle and the builder that owns its values.
pub(crate) fn forward_interview<'a>(
    checkpoint: &'a Checkpoint,
    prepared: &EmbeddedInterview,
) -> Result<(GraphBuilder<'a>, InterviewForward)> {
    let input = NetworkInput::from_interview(prepared, &checkpoint.topology);
    let mut builder = GraphBuilder::new(
        &checkpoint.model_config,
        &checkpoint.topology,
        &checkpoint.params,
    )?;
    let forward = builder.forward(&input, false, None)?;
    Ok((builder, forward))
}

/// Class probabilities `[p_normal, p_depression]` for one interview.
/// The interview is transformed with the checkpoint's own
/// question-embedding mode first, so inference always matches training.
pub fn predict(checkpoint: &Checkpoint, interview: &EmbeddedInterview) -> Result<[f64; 2]> {
    let prepared = prepare_interview(interview, checkpoint.question_embedding)?;
    let (builder, forward) = forward_interview(checkpoint, &prepared)?;
    let row = builder.tape().value(forward.probs);
    Ok([row[[0, 0]], row[[0, 1]]])
}

/// The label with the higher probability; normal wins exact ties.
pub fn predicted_label(probs: [f64; 2]) -> Label {
    if probs[1] > probs[0] {
        Label::Depression
    } else {
        Label::Normal
    }
}

/// Evaluate a checkpoint on labeled interviews and compute the full
/// metric set over its predictions.
pub fn evaluate_checkpoint(
    checkpoint: &Checkpoint,
    data: &[EmbeddedInterview],
) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::validation("cannot evaluate on an empty dataset"));
    }
    let prepared = prepare_corpus(data, checkpoint.question_embedding)?;
    let mut pairs = Vec::with_capacity(prepared.len());
    for interview in &prepared {
        let truth = interview.label.ok_or_else(|| {
            Error::validation(format!(
                "interview {} has no label; evaluation needs ground truth",
                interview.participant_id
            ))
        })?;
        let (builder, forward) = forward_interview(checkpoint, interview)?;
        let row = builder.tape().value(forward.probs);
        pairs.push((truth, predicted_label([row[[0, 0]], row[[0, 1]]])));
    }
    compute_metrics(&pairs)
}
