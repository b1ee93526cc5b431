//! Reproducibility records written beside every command's artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use interq_core::Result;
use serde::Serialize;

use crate::util::write_json_atomic;

pub const MANIFEST_VERSION: u32 = 1;

/// What produced an artifact: the command, the effective seed, the full
/// configuration it ran with, and the files it read and wrote.  Every
/// field is deterministic, so rerunning a command with identical inputs,
/// flags, and seed rewrites the manifest byte for byte.  Wall-clock
/// measurements are kept out of it, in the sidecar file named by
/// `timings_file`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub manifest_version: u32,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub timings_file: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            manifest_version: MANIFEST_VERSION,
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings_file: String::new(),
        }
    }

    pub fn input(mut self, key: &str, value: impl Into<String>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn output(mut self, key: &str, value: impl Into<String>) -> Self {
        self.outputs.insert(key.to_string(), value.into());
        self
    }
}

/// Per-stage wall-clock timer for the timings sidecar.
pub struct Stopwatch {
    mark: Instant,
    laps: Vec<StageTiming>,
}

#[derive(Debug, Serialize)]
struct StageTiming {
    stage: String,
    seconds: f64,
}

#[derive(Debug, Serialize)]
struct TimingsFile {
    command: String,
    stages: Vec<StageTiming>,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch { mark: Instant::now(), laps: Vec::new() }
    }

    /// Record the time since the previous lap (or start) under `stage`.
    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.laps.push(StageTiming {
            stage: stage.to_string(),
            seconds: now.duration_since(self.mark).as_secs_f64(),
        });
        self.mark = now;
    }
}

/// Manifest location for a command whose primary output is `target`:
/// `<dir>/manifest.json` for directories, `<stem>.manifest.json` beside
/// single-file outputs.
pub fn manifest_path(target: &Path, target_is_dir: bool) -> PathBuf {
    if target_is_dir {
        target.join("manifest.json")
    } else {
        target.with_extension("manifest.json")
    }
}

/// Write the manifest and its timings sidecar next to `target`.
/// Returns the manifest path.
pub fn write_manifest(
    target: &Path,
    target_is_dir: bool,
    mut manifest: RunManifest,
    watch: Stopwatch,
) -> Result<PathBuf> {
    let manifest_file = manifest_path(target, target_is_dir);
    let timings_file = if target_is_dir {
        target.join("timings.json")
    } else {
        target.with_extension("timings.json")
    };
    manifest.timings_file = timings_file
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let timings = TimingsFile { command: manifest.command.clone(), stages: watch.laps };
    write_json_atomic(&manifest_file, &manifest)?;
    write_json_atomic(&timings_file, &timings)?;
    Ok(manifest_file)
}
