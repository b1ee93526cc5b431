//! `interq` — question-centric multimodal screening-interview pipeline.
//!
//! Exit codes: 0 success, 2 usage errors, 3 data/validation errors,
//! 4 runtime failures (I/O, training divergence).

mod commands;
mod config;
mod manifest;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "interq",
    version,
    about = "Structure screening interviews around a question taxonomy, build \
             aligned per-question feature matrices, and train and inspect a \
             multimodal attention classifier.",
    propagate_version = true
)]
struct Cli {
    /// Run seed; overrides the config file and the INTERQ_SEED variable.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// TOML config file with optional [model], [training], [data], and
    /// [synthesis] sections.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print progress details to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic feature corpus.
    Synthesize(commands::synthesize::SynthesizeArgs),
    /// Segment interview transcripts into question-anchored slots.
    Structure(commands::structure::StructureArgs),
    /// Build aligned feature matrices from structured interviews.
    ExtractFeatures(commands::extract::ExtractFeaturesArgs),
    /// Train the attention network and write a checkpoint.
    Train(commands::train::TrainArgs),
    /// Score a checkpoint and write metrics.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Train and score every configuration in an ablation plan.
    Ablate(commands::ablate::AblateArgs),
    /// Summarize where the trained model's attention concentrates.
    ReportAttention(commands::attention::ReportAttentionArgs),
    /// Map one interviewer question onto the question taxonomy.
    MapQuestion(commands::map_question::MapQuestionArgs),
    /// Synthesize, train, evaluate, and report attention in one run.
    Pipeline(commands::pipeline::PipelineArgs),
}

fn run(cli: &Cli) -> interq_core::Result<()> {
    let settings = config::load_settings(cli.config.as_deref(), cli.seed, cli.verbose)?;
    match &cli.command {
        Command::Synthesize(args) => commands::synthesize::run(&settings, args),
        Command::Structure(args) => commands::structure::run(&settings, args),
        Command::ExtractFeatures(args) => commands::extract::run(&settings, args),
        Command::Train(args) => commands::train::run(&settings, args),
        Command::Evaluate(args) => commands::evaluate::run(&settings, args),
        Command::Ablate(args) => commands::ablate::run(&settings, args),
        Command::ReportAttention(args) => commands::attention::run(&settings, args),
        Command::MapQuestion(args) => commands::map_question::run(&settings, args),
        Command::Pipeline(args) => commands::pipeline::run(&settings, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 3 } else { 4 })
        }
    }
}
