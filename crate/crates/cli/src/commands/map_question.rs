//! `interq map-question` — place one interviewer question in the taxonomy.

use std::path::PathBuf;

use clap::Args;
use interq_core::encoder::HashedContextEncoder;
use interq_core::structuring::map_unseen_question;
use interq_core::taxonomy::QuestionTaxonomy;
use interq_core::{Error, Result};

use crate::config::Settings;
use crate::manifest::{write_manifest, RunManifest, Stopwatch};
use crate::util::write_json_atomic;

#[derive(Debug, Args)]
pub struct MapQuestionArgs {
    /// Interviewer question text to map.
    #[arg(long, value_name = "TEXT")]
    pub text: String,
    /// Also write the mapping outcome to this JSON file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run(settings: &Settings, args: &MapQuestionArgs) -> Result<()> {
    let mut watch = Stopwatch::start();
    let mut taxonomy = QuestionTaxonomy::builtin();
    let encoder = HashedContextEncoder::default();
    let outcome = map_unseen_question(&args.text, &mut taxonomy, &encoder)?;
    watch.lap("map");
    let rendered = serde_json::to_string_pretty(&outcome)
        .map_err(|e| Error::validation(format!("serializing mapping outcome: {e}")))?;
    println!("{rendered}");
    if let Some(out) = &args.out {
        write_json_atomic(out, &outcome)?;
        let manifest = RunManifest::new(
            "map-question",
            settings.seed,
            serde_json::json!({ "text": args.text }),
        )
        .output("outcome", crate::util::path_str(out));
        write_manifest(out, false, manifest, watch)?;
    }
    Ok(())
}
