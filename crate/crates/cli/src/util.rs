//! Small filesystem and data-selection helpers shared by the commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use interq_core::features::{EmbeddedInterview, Label};
use interq_core::training::Checkpoint;
use interq_core::{Error, Result};
use serde::Serialize;

pub fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Write bytes via a temporary file plus rename so readers never see a
/// half-written artifact.
pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(path_str(parent), e))?;
        }
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::validation(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!("{}.tmp", file_name.to_string_lossy()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(path_str(&tmp), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path_str(path), e))?;
    Ok(())
}

/// Config snapshot for a manifest.
pub fn to_json<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    serde_json::to_value(value)
        .map_err(|e| Error::validation(format!("serializing configuration: {e}")))
}

/// Pretty-printed JSON with a trailing newline, written atomically.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::validation(format!("serializing {}: {e}", path.display())))?;
    bytes.push(b'\n');
    write_bytes_atomic(path, &bytes)
}

/// Create `dir` if needed; refuse to reuse a non-empty one without
/// `--force`.
pub fn ensure_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(Error::validation(format!(
                "output path {} exists and is not a directory",
                dir.display()
            )));
        }
        let mut entries =
            std::fs::read_dir(dir).map_err(|e| Error::io(path_str(dir), e))?;
        if entries.next().is_some() && !force {
            return Err(Error::validation(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
        return Ok(());
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(path_str(dir), e))
}

/// Files under `dir` whose names end in `suffix`, sorted by name for a
/// deterministic processing order.
pub fn files_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(path_str(dir), e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.file_name()
                    .map(|n| n.to_string_lossy().ends_with(suffix))
                    .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Parse a labels file: CSV with a `participant_id,label` header, label
/// values `normal`/`depression` or `0`/`1`.
pub fn read_labels_file(path: &Path) -> Result<BTreeMap<String, Label>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::validation(format!("labels file {}: {e}", path.display())))?;
    let mut labels = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path_str(path),
            line: i + 2,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::Parse {
                path: path_str(path),
                line: i + 2,
                message: format!("expected 2 columns, got {}", record.len()),
            });
        }
        let id = record[0].to_string();
        let label = match record[1].to_ascii_lowercase().as_str() {
            "normal" | "0" => Label::Normal,
            "depression" | "1" => Label::Depression,
            other => {
                return Err(Error::Parse {
                    path: path_str(path),
                    line: i + 2,
                    message: format!(
                        "unknown label {other:?} (expected normal/depression or 0/1)"
                    ),
                })
            }
        };
        if labels.insert(id.clone(), label).is_some() {
            return Err(Error::validation(format!(
                "labels file {} lists participant {id} twice",
                path.display()
            )));
        }
    }
    Ok(labels)
}

/// Which interviews a scoring command reads from the features directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalScope {
    /// The checkpoint's recorded test split when present, otherwise all.
    Auto,
    Train,
    Validation,
    Test,
    /// Every labeled interview in the directory.
    All,
}

/// Pick the interviews named by `scope`, using the partition recorded in
/// the checkpoint.  Returns the selection and the resolved scope name.
pub fn select_scope(
    corpus: &[EmbeddedInterview],
    checkpoint: &Checkpoint,
    scope: EvalScope,
) -> Result<(Vec<EmbeddedInterview>, &'static str)> {
    let split = &checkpoint.meta.split;
    let (ids, name): (&[String], &'static str) = match scope {
        EvalScope::Auto => {
            if split.test.is_empty() {
                return Ok((corpus.to_vec(), "all"));
            }
            (&split.test, "test")
        }
        EvalScope::Train => (&split.train, "train"),
        EvalScope::Validation => (&split.validation, "validation"),
        EvalScope::Test => (&split.test, "test"),
        EvalScope::All => return Ok((corpus.to_vec(), "all")),
    };
    let by_id: BTreeMap<&str, &EmbeddedInterview> = corpus
        .iter()
        .map(|i| (i.participant_id.as_str(), i))
        .collect();
    let mut selected = Vec::with_capacity(ids.len());
    let mut missing = Vec::new();
    for id in ids {
        match by_id.get(id.as_str()) {
            Some(interview) => selected.push((*interview).clone()),
            None => missing.push(id.as_str()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::validation(format!(
            "{} interviews from the checkpoint's {name} split are missing \
             from the features directory (first: {})",
            missing.len(),
            missing[0]
        )));
    }
    if selected.is_empty() {
        return Err(Error::validation(format!(
            "the checkpoint records no {name} interviews"
        )));
    }
    Ok((selected, name))
}
