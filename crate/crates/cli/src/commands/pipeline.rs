//! `interq pipeline` — synthesize → train → evaluate → report-attention.

use std::path::PathBuf;

use clap::Args;
use interq_core::Result;

use crate::commands::{attention, evaluate, synthesize, train};
use crate::config::Settings;
use crate::util::{ensure_output_dir, EvalScope};

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Directory receiving every stage's artifacts.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

/// Each stage writes its own manifest; a failing stage stops the run and
/// leaves the artifacts of completed stages in place.
pub fn run(settings: &Settings, args: &PipelineArgs) -> Result<()> {
    ensure_output_dir(&args.out, args.force)?;
    let features_dir = args.out.join("features");
    let checkpoint = args.out.join("model.ckpt");

    println!("[1/4] synthesize");
    synthesize::run(
        settings,
        &synthesize::SynthesizeArgs::from_config(features_dir.clone(), args.force),
    )?;

    println!("[2/4] train");
    train::run(
        settings,
        &train::TrainArgs {
            features_dir: features_dir.clone(),
            out: checkpoint.clone(),
        },
    )?;

    println!("[3/4] evaluate");
    evaluate::run(
        settings,
        &evaluate::EvaluateArgs {
            checkpoint: checkpoint.clone(),
            features_dir: features_dir.clone(),
            out: args.out.join("metrics.json"),
            scope: EvalScope::Auto,
        },
    )?;

    println!("[4/4] report-attention");
    attention::run(
        settings,
        &attention::ReportAttentionArgs {
            checkpoint,
            features_dir,
            out: args.out.join("attention.json"),
            plots: Some(args.out.join("plots")),
            scope: EvalScope::Auto,
            force: true,
        },
    )?;

    println!("pipeline complete: {}", args.out.display());
    Ok(())
}
