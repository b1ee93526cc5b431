//! `interq train` — fit the attention network and write a checkpoint.

use std::path::PathBuf;

use clap::Args;
use interq_core::features::cache::load_corpus;
use interq_core::features::prep::QuestionEmbedding;
use interq_core::model::{ModelConfig, NetworkTopology};
use interq_core::training::{split_corpus, train, TrainConfig};
use interq_core::Result;
use serde::Serialize;

use crate::config::Settings;
use crate::manifest::{write_manifest, RunManifest, Stopwatch};
use crate::util::{path_str, to_json};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of feature files (from synthesize or extract-features).
    #[arg(long, value_name = "DIR")]
    pub features_dir: PathBuf,
    /// Checkpoint output file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

/// Manifest snapshot of everything that shaped the fitted parameters.
#[derive(Serialize)]
struct TrainRunConfig<'a> {
    model: &'a ModelConfig,
    training: &'a TrainConfig,
    question_embedding: QuestionEmbedding,
    split_seed: u64,
}

pub fn run(settings: &Settings, args: &TrainArgs) -> Result<()> {
    let model_config = settings.config.model.clone();
    let train_config = settings.train_config();
    let question_embedding = settings.config.data.question_embedding;
    let topology = NetworkTopology::default();

    let mut watch = Stopwatch::start();
    let corpus = load_corpus(&args.features_dir)?;
    let split = split_corpus(&corpus, settings.split_seed())?;
    watch.lap("load");
    if settings.verbose {
        eprintln!(
            "[train] {} train / {} validation / {} test interviews",
            split.train.len(),
            split.validation.len(),
            split.test.len()
        );
    }
    let checkpoint = train(
        &model_config,
        &topology,
        question_embedding,
        &train_config,
        &split,
    )?;
    watch.lap("train");
    if settings.verbose {
        for record in &checkpoint.meta.history {
            eprintln!(
                "[train] epoch {:>3}  train_loss {:.6}  val_loss {:.6}  val_macro_f1 {:.4}",
                record.epoch, record.train_loss, record.val_loss, record.val_macro_f1
            );
        }
    }
    checkpoint.save(&args.out)?;
    watch.lap("write");

    let config = to_json(&TrainRunConfig {
        model: &model_config,
        training: &train_config,
        question_embedding,
        split_seed: settings.split_seed(),
    })?;
    let manifest = RunManifest::new("train", train_config.seed, config)
        .input("features_dir", path_str(&args.features_dir))
        .output("checkpoint", path_str(&args.out))
        .output("best_epoch", checkpoint.meta.best_epoch.to_string())
        .output(
            "best_val_macro_f1",
            format!("{:.6}", checkpoint.meta.best_val_macro_f1),
        );
    write_manifest(&args.out, false, manifest, watch)?;
    println!(
        "best epoch {} (validation macro F1 {:.4}); checkpoint written to {}",
        checkpoint.meta.best_epoch,
        checkpoint.meta.best_val_macro_f1,
        args.out.display()
    );
    Ok(())
}
