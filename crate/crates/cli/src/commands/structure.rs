//! `interq structure` — segment transcripts into question-anchored slots.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use interq_core::encoder::HashedContextEncoder;
use interq_core::structuring::{
    read_transcript, structure_interview, MatchStrategy, SegmentationReport,
};
use interq_core::taxonomy::QuestionTaxonomy;
use interq_core::{Error, Result};

use crate::config::Settings;
use crate::manifest::{write_manifest, RunManifest, Stopwatch};
use crate::util::{ensure_output_dir, path_str, write_json_atomic};

#[derive(Debug, Args)]
pub struct StructureArgs {
    /// One transcript file, or a directory of them.  JSONL transcripts
    /// hold `{"speaker", "start", "end", "text"}` objects; any other
    /// extension is read as tab-separated `start stop speaker text`.
    #[arg(long, value_name = "PATH")]
    pub transcripts: PathBuf,
    /// Directory for the structured-interview JSON files.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Map near-miss interviewer questions onto the closest taxonomy
    /// entry and append genuinely new ones as extension entries, instead
    /// of failing on anything that is not an exact match.
    #[arg(long)]
    pub allow_unseen: bool,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

const TRANSCRIPT_EXTENSIONS: [&str; 4] = ["jsonl", "json", "tsv", "csv"];

fn transcript_files(path: &PathBuf) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.clone()]);
    }
    if !path.is_dir() {
        return Err(Error::validation(format!(
            "transcript path {} does not exist",
            path.display()
        )));
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path_str(path), e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| TRANSCRIPT_EXTENSIONS.contains(&e))
                    .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::validation(format!(
            "no transcript files (.jsonl/.json/.tsv/.csv) under {}",
            path.display()
        )));
    }
    Ok(files)
}

pub fn run(settings: &Settings, args: &StructureArgs) -> Result<()> {
    let files = transcript_files(&args.transcripts)?;
    ensure_output_dir(&args.out, args.force)?;

    let mut taxonomy = QuestionTaxonomy::builtin();
    let encoder = HashedContextEncoder::default();
    let strategy = if args.allow_unseen {
        MatchStrategy::Similarity { encoder: &encoder, allow_append: true }
    } else {
        MatchStrategy::Exact
    };

    let mut watch = Stopwatch::start();
    let mut reports: BTreeMap<String, SegmentationReport> = BTreeMap::new();
    let mut unmatched: Vec<(String, String)> = Vec::new();
    for file in &files {
        let participant_id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let turns = read_transcript(file)?;
        let structured =
            structure_interview(&participant_id, &turns, &mut taxonomy, &strategy)?;
        for q in &structured.report.unmatched_questions {
            unmatched.push((participant_id.clone(), q.clone()));
        }
        if settings.verbose {
            eprintln!(
                "[structure] {participant_id}: {} segments, {} unmatched",
                structured.segments.len(),
                structured.report.unmatched_questions.len()
            );
        }
        write_json_atomic(
            &args.out.join(format!("{participant_id}.structured.json")),
            &structured,
        )?;
        reports.insert(participant_id, structured.report.clone());
    }
    write_json_atomic(&args.out.join("structuring_report.json"), &reports)?;
    watch.lap("structure");

    let manifest = RunManifest::new(
        "structure",
        settings.seed,
        serde_json::json!({ "allow_unseen": args.allow_unseen }),
    )
    .input("transcripts", path_str(&args.transcripts))
    .output("structured_dir", path_str(&args.out))
    .output("interviews", files.len().to_string());
    write_manifest(&args.out, true, manifest, watch)?;

    if !unmatched.is_empty() && !args.allow_unseen {
        let listing: Vec<String> = unmatched
            .iter()
            .map(|(pid, q)| format!("{pid}: {q:?}"))
            .collect();
        return Err(Error::validation(format!(
            "{} interviewer questions matched no taxonomy entry \
             (rerun with --allow-unseen to map them):\n  {}",
            unmatched.len(),
            listing.join("\n  ")
        )));
    }
    println!(
        "structured {} interviews into {}",
        files.len(),
        args.out.display()
    );
    Ok(())
}
