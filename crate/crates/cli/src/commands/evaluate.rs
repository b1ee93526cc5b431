//! `interq evaluate` — score a checkpoint and write metrics.

use std::path::PathBuf;

use clap::Args;
use interq_core::evaluation::evaluate_checkpoint;
use interq_core::features::cache::load_corpus;
use interq_core::training::Checkpoint;
use interq_core::Result;

use crate::config::Settings;
use crate::manifest::{write_manifest, RunManifest, Stopwatch};
use crate::util::{path_str, select_scope, write_json_atomic, EvalScope};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Trained checkpoint file.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Directory of feature files to score.
    #[arg(long, value_name = "DIR")]
    pub features_dir: PathBuf,
    /// Metrics output file (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Which interviews to score.
    #[arg(long, value_enum, default_value_t = EvalScope::Auto)]
    pub scope: EvalScope,
}

pub fn run(settings: &Settings, args: &EvaluateArgs) -> Result<()> {
    let mut watch = Stopwatch::start();
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let corpus = load_corpus(&args.features_dir)?;
    let (data, scope_name) = select_scope(&corpus, &checkpoint, args.scope)?;
    watch.lap("load");
    let metrics = evaluate_checkpoint(&checkpoint, &data)?;
    watch.lap("score");
    write_json_atomic(&args.out, &metrics)?;
    watch.lap("write");

    let manifest = RunManifest::new(
        "evaluate",
        settings.seed,
        serde_json::json!({ "scope": scope_name }),
    )
    .input("checkpoint", path_str(&args.checkpoint))
    .input("features_dir", path_str(&args.features_dir))
    .output("metrics", path_str(&args.out))
    .output("interviews", data.len().to_string());
    write_manifest(&args.out, false, manifest, watch)?;
    println!(
        "{scope_name} scope: {} interviews, accuracy {:.4}, macro F1 {:.4}, g-mean {:.4}",
        data.len(),
        metrics.accuracy,
        metrics.macro_f1,
        metrics.g_mean
    );
    Ok(())
}
