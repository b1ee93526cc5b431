//! `interq ablate` — train and score every configuration in a plan.

use std::path::PathBuf;

use clap::Args;
use interq_core::evaluation::{
    ablation_table_csv, component_plan, modality_plan, run_ablation, AblationSetting,
};
use interq_core::features::cache::load_corpus;
use interq_core::{Error, Result};

use crate::config::Settings;
use crate::manifest::{write_manifest, RunManifest, Stopwatch};
use crate::util::{path_str, to_json, write_bytes_atomic};

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Directory of feature files.
    #[arg(long, value_name = "DIR")]
    pub features_dir: PathBuf,
    /// CSV table output file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// JSON array of ablation settings; defaults to the built-in
    /// component plan followed by the modality plan.
    #[arg(long, value_name = "FILE")]
    pub plan: Option<PathBuf>,
}

fn load_plan(path: &PathBuf) -> Result<Vec<AblationSetting>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path_str(path),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn run(settings: &Settings, args: &AblateArgs) -> Result<()> {
    let plan = match &args.plan {
        Some(path) => load_plan(path)?,
        None => {
            let mut plan = component_plan();
            plan.extend(modality_plan());
            plan
        }
    };
    let train_config = settings.train_config();

    let mut watch = Stopwatch::start();
    let corpus = load_corpus(&args.features_dir)?;
    watch.lap("load");
    if settings.verbose {
        eprintln!(
            "[ablate] {} settings over {} interviews",
            plan.len(),
            corpus.len()
        );
    }
    let rows = run_ablation(&plan, &corpus, &settings.config.model, &train_config)?;
    watch.lap("train");
    let table = ablation_table_csv(&rows)?;
    write_bytes_atomic(&args.out, table.as_bytes())?;
    watch.lap("write");

    let manifest = RunManifest::new(
        "ablate",
        train_config.seed,
        serde_json::json!({
            "model": to_json(&settings.config.model)?,
            "training": to_json(&train_config)?,
            "plan": to_json(&plan)?,
            "split_seed": train_config.seed,
        }),
    )
    .input("features_dir", path_str(&args.features_dir))
    .output("table", path_str(&args.out))
    .output("settings", plan.len().to_string());
    write_manifest(&args.out, false, manifest, watch)?;
    print!("{table}");
    Ok(())
}
