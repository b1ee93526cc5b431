//! `interq extract-features` — aligned matrices from structured interviews.

use std::path::PathBuf;

use clap::Args;
use interq_core::features::cache::save_corpus;
use interq_core::features::{
    embed_interview, parse_landmarks_jsonl, AcousticAdapter, CsvFunctionalsAdapter,
    FeatureSources, SyntheticAcousticAdapter,
};
use interq_core::encoder::HashedContextEncoder;
use interq_core::structuring::StructuredInterview;
use interq_core::{Error, Result};

use crate::config::Settings;
use crate::manifest::{write_manifest, RunManifest, Stopwatch};
use crate::util::{
    ensure_output_dir, files_with_suffix, path_str, read_labels_file,
};

#[derive(Debug, Args)]
pub struct ExtractFeaturesArgs {
    /// Directory of `<participant>.structured.json` files.
    #[arg(long, value_name = "DIR")]
    pub structured: PathBuf,
    /// Directory the feature files are written to.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// CSV with a `participant_id,label` header assigning class labels
    /// (`normal`/`depression` or `0`/`1`).  Unlisted interviews stay
    /// unlabeled and can only be scored, not trained on.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Directory of `<participant>.audio.tsv` acoustic functionals.
    #[arg(long, value_name = "DIR")]
    pub audio_dir: Option<PathBuf>,
    /// Derive deterministic pseudo-acoustic functionals from the
    /// transcript instead of reading measurements (ignored when
    /// --audio-dir is set).
    #[arg(long)]
    pub synthetic_audio: bool,
    /// Directory of `<participant>.landmarks.jsonl` facial-landmark
    /// frames; omit to leave the visual modality absent.
    #[arg(long, value_name = "DIR")]
    pub landmarks_dir: Option<PathBuf>,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

pub fn run(settings: &Settings, args: &ExtractFeaturesArgs) -> Result<()> {
    let files = files_with_suffix(&args.structured, ".structured.json")?;
    if files.is_empty() {
        return Err(Error::validation(format!(
            "no .structured.json files under {}",
            args.structured.display()
        )));
    }
    let labels = match &args.labels {
        Some(path) => read_labels_file(path)?,
        None => Default::default(),
    };
    ensure_output_dir(&args.out, args.force)?;

    let text_encoder = HashedContextEncoder::default();
    let csv_audio = args.audio_dir.as_ref().map(CsvFunctionalsAdapter::new);
    let synthetic_audio = SyntheticAcousticAdapter { seed: settings.seed };
    let acoustic: Option<&dyn AcousticAdapter> = if let Some(adapter) = &csv_audio {
        Some(adapter)
    } else if args.synthetic_audio {
        Some(&synthetic_audio)
    } else {
        None
    };

    let mut watch = Stopwatch::start();
    let mut corpus = Vec::with_capacity(files.len());
    for file in &files {
        let text = std::fs::read_to_string(file)
            .map_err(|e| Error::io(path_str(file), e))?;
        let structured: StructuredInterview =
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path_str(file),
                line: e.line(),
                message: e.to_string(),
            })?;
        let pid = structured.participant_id.clone();
        let frames = match &args.landmarks_dir {
            Some(dir) => {
                let path = dir.join(format!("{pid}.landmarks.jsonl"));
                let content = std::fs::read_to_string(&path)
                    .map_err(|e| Error::io(path_str(&path), e))?;
                Some(parse_landmarks_jsonl(&content, &path_str(&path))?)
            }
            None => None,
        };
        let sources = FeatureSources {
            text_encoder: Some(&text_encoder),
            acoustic,
            landmarks: frames.as_deref(),
        };
        let embedded = embed_interview(&structured, labels.get(&pid).copied(), &sources)?;
        if settings.verbose {
            eprintln!(
                "[extract-features] {pid}: label {:?}, {} hierarchy entries",
                embedded.label,
                embedded.hierarchy.len()
            );
        }
        corpus.push(embedded);
    }
    watch.lap("embed");
    save_corpus(&args.out, &corpus)?;
    watch.lap("write");

    let audio_source = if csv_audio.is_some() {
        "csv-functionals"
    } else if args.synthetic_audio {
        "synthetic-acoustic"
    } else {
        "none"
    };
    let mut manifest = RunManifest::new(
        "extract-features",
        settings.seed,
        serde_json::json!({
            "audio_source": audio_source,
            "visual_source": if args.landmarks_dir.is_some() { "landmarks" } else { "none" },
            "text_encoder": "hashed-context",
        }),
    )
    .input("structured_dir", path_str(&args.structured))
    .output("features_dir", path_str(&args.out))
    .output("interviews", corpus.len().to_string());
    if let Some(path) = &args.labels {
        manifest = manifest.input("labels", path_str(path));
    }
    if let Some(dir) = &args.audio_dir {
        manifest = manifest.input("audio_dir", path_str(dir));
    }
    if let Some(dir) = &args.landmarks_dir {
        manifest = manifest.input("landmarks_dir", path_str(dir));
    }
    write_manifest(&args.out, true, manifest, watch)?;
    println!(
        "embedded {} interviews into {}",
        corpus.len(),
        args.out.display()
    );
    Ok(())
}
