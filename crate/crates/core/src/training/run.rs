//! The optimization loop: mini-batch gradient descent with
//! per-epoch validation scoring and best-checkpoint selection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evaluation::compute_metrics;
use crate::features::prep::{prepare_corpus, QuestionEmbedding};
use crate::features::{EmbeddedInterview, Label};
use crate::model::{
    init_params, GraphBuilder, ModelConfig, NetworkInput, NetworkTopology, ParamStore,
};

use super::augment::{augment_minority, SplitRole};
use super::checkpoint::{Checkpoint, CheckpointMeta, EpochRecord, CHECKPOINT_VERSION};
use super::optimizer::AdamOptimizer;
use super::{DataSplit, TrainConfig};

/// Ready-to-feed example: the network input plus its 0/1 target.
pub(crate) struct Example {
    input: NetworkInput,
    target: f64,
    label: Label,
}

fn to_examples(
    interviews: &[EmbeddedInterview],
    topology: &NetworkTopology,
) -> Result<Vec<Example>> {
    interviews
        .iter()
        .map(|interview| {
            let label = interview.label.ok_or_else(|| {
                Error::validation(format!("interview {} has no label", interview.participant_id))
            })?;
            Ok(Example {
                input: NetworkInput::from_interview(interview, topology),
                target: label.index() as f64,
                label,
            })
        })
        .collect()
}

/// Forward every example under fixed parameters (no dropout) and
/// return (mean loss, macro F1).
pub(crate) fn score_examples(
    config: &ModelConfig,
    topology: &NetworkTopology,
    params: &ParamStore,
    examples: &[Example],
) -> Result<(f64, f64)> {
    let mut builder = GraphBuilder::new(config, topology, params)?;
    let mut probs = Vec::with_capacity(examples.len());
    let mut targets = Vec::with_capacity(examples.len());
    let mut pairs = Vec::with_capacity(examples.len());
    for example in examples {
        let forward = builder.forward(&example.input, false, None)?;
        let row = builder.tape().value(forward.probs);
        let predicted = if row[[0, 1]] > row[[0, 0]] {
            Label::Depression
        } else {
            Label::Normal
        };
        pairs.push((example.label, predicted));
        probs.push(forward.probs);
        targets.push(example.target);
    }
    let loss_node = builder.loss(&probs, &targets)?;
    let loss = builder.tape().value(loss_node)[[0, 0]];
    let metrics = compute_metrics(&pairs)?;
    Ok((loss, metrics.macro_f1))
}

/// Train on `split.train`, score `split.validation` every epoch, and
/// return the checkpoint with the best validation macro F1 (earliest
/// epoch wins ties). Fully deterministic given `train_config.seed`.
///
/// Augmentation (when enabled) runs first, on the raw training
/// interviews; the question-embedding transform is applied after it,
/// so masked copies never leak structural offsets into hidden slots.
pub fn train(
    model_config: &ModelConfig,
    topology: &NetworkTopology,
    question_embedding: QuestionEmbedding,
    train_config: &TrainConfig,
    split: &DataSplit,
) -> Result<Checkpoint> {
    model_config.validate()?;
    topology.validate()?;
    train_config.validate()?;
    split.validate()?;
    if split.train.is_empty() {
        return Err(Error::validation("training partition is empty"));
    }
    if split.validation.is_empty() {
        return Err(Error::validation(
            "validation partition is empty; model selection needs validation scores",
        ));
    }

    // The dropout rate is a training-time knob; carry it into the
    // model configuration actually used for the graphs.
    let mut config = model_config.clone();
    config.dropout_rate = train_config.dropout_rate;
    config.validate()?;

    let mut master = ChaCha8Rng::seed_from_u64(train_config.seed);
    let augment_seed: u64 = master.gen();
    let init_seed: u64 = master.gen();
    let loop_seed: u64 = master.gen();

    let train_set = if train_config.augment {
        augment_minority(&split.train, SplitRole::Train, train_config, augment_seed)?
    } else {
        split.train.clone()
    };
    let train_set = prepare_corpus(&train_set, question_embedding)?;
    let val_set = prepare_corpus(&split.validation, question_embedding)?;

    let train_examples = to_examples(&train_set, topology)?;
    let val_examples = to_examples(&val_set, topology)?;

    let mut params = init_params(&config, topology, init_seed)?;
    let mut optimizer = AdamOptimizer::new(train_config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(loop_seed);

    let mut history = Vec::with_capacity(train_config.epochs);
    let mut best: Option<(f64, usize, ParamStore)> = None;

    for epoch in 0..train_config.epochs {
        let mut order: Vec<usize> = (0..train_examples.len()).collect();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for (batch_index, chunk) in order.chunks(train_config.batch_size).enumerate() {
            let mut builder = GraphBuilder::new(&config, topology, &params)?;
            let mut probs = Vec::with_capacity(chunk.len());
            let mut targets = Vec::with_capacity(chunk.len());
            for &k in chunk {
                let forward = builder.forward(&train_examples[k].input, true, Some(&mut rng))?;
                probs.push(forward.probs);
                targets.push(train_examples[k].target);
            }
            let loss_node = builder.loss(&probs, &targets)?;
            let loss = builder.tape().value(loss_node)[[0, 0]];
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_index,
                    message: format!("loss became {loss}"),
                });
            }
            let grads = builder.backward(loss_node)?;
            optimizer.step(&mut params, &grads)?;
            loss_sum += loss * chunk.len() as f64;
        }
        let train_loss = loss_sum / train_examples.len() as f64;

        let (val_loss, val_macro_f1) = score_examples(&config, topology, &params, &val_examples)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: 0,
                message: format!("validation loss became {val_loss}"),
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_macro_f1,
        });
        let improved = match &best {
            None => true,
            Some((best_f1, _, _)) => val_macro_f1 > *best_f1,
        };
        if improved {
            best = Some((val_macro_f1, epoch, params.clone()));
        }
    }

    let (best_val_macro_f1, best_epoch, best_params) =
        best.expect("at least one epoch ran, so a best checkpoint exists");
    Ok(Checkpoint {
        version: CHECKPOINT_VERSION,
        model_config: config,
        topology: topology.clone(),
        question_embedding,
        params: best_params,
        meta: CheckpointMeta {
            seed: train_config.seed,
            best_epoch,
            best_val_macro_f1,
            history,
            split: split.membership(),
        },
    })
}
