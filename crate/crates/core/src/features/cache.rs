//! On-disk feature store: one versioned binary file per interview.
//!
//! Files are named `{participant_id}.feat` and carry a format version so
//! stale artifacts fail loudly instead of deserializing garbage.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{validate_interview, EmbeddedInterview};

/// Bump when the serialized layout changes.
pub const FEATURE_FILE_VERSION: u32 = 1;

/// File extension for stored interviews.
pub const FEATURE_FILE_EXT: &str = "feat";

#[derive(Serialize, Deserialize)]
struct FeatureFile {
    version: u32,
    interview: EmbeddedInterview,
}

/// Write one interview to `dir/{participant_id}.feat`.
pub fn save_interview(dir: &Path, interview: &EmbeddedInterview) -> Result<PathBuf> {
    validate_interview(interview)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let path = dir.join(format!("{}.{FEATURE_FILE_EXT}", interview.participant_id));
    let file = FeatureFile {
        version: FEATURE_FILE_VERSION,
        interview: interview.clone(),
    };
    let bytes = bincode::serialize(&file).map_err(|e| Error::CorruptArtifact {
        path: path.display().to_string(),
        message: format!("serialization failed: {e}"),
    })?;
    // Write through a temp file so a crash never leaves a half-written
    // artifact under the final name.
    let tmp = path.with_extension("feat.tmp");
    fs::write(&tmp, &bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(path)
}

/// Write a whole corpus; returns the paths written.
pub fn save_corpus(dir: &Path, corpus: &[EmbeddedInterview]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(corpus.len());
    for interview in corpus {
        paths.push(save_interview(dir, interview)?);
    }
    Ok(paths)
}

/// Read one interview, checking version and invariants.
pub fn load_interview(path: &Path) -> Result<EmbeddedInterview> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: FeatureFile = bincode::deserialize(&bytes).map_err(|e| Error::CorruptArtifact {
        path: path.display().to_string(),
        message: format!("deserialization failed: {e}"),
    })?;
    if file.version != FEATURE_FILE_VERSION {
        return Err(Error::CorruptArtifact {
            path: path.display().to_string(),
            message: format!(
                "feature file version {} but this build reads {FEATURE_FILE_VERSION}",
                file.version
            ),
        });
    }
    validate_interview(&file.interview)?;
    Ok(file.interview)
}

/// Read every `.feat` file in a directory, sorted by file name so the
/// corpus order never depends on directory iteration order.
pub fn load_corpus(dir: &Path) -> Result<Vec<EmbeddedInterview>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(FEATURE_FILE_EXT))
        .collect();
    if paths.is_empty() {
        return Err(Error::validation(format!(
            "no .{FEATURE_FILE_EXT} files in {}",
            dir.display()
        )));
    }
    paths.sort();
    paths.iter().map(|p| load_interview(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::synthetic::{generate_synthetic_corpus, SyntheticConfig};

    fn small_corpus() -> Vec<EmbeddedInterview> {
        let config = SyntheticConfig {
            n_depressed: 2,
            n_normal: 2,
            seed: 7,
            ..SyntheticConfig::default()
        };
        generate_synthetic_corpus(&config).unwrap()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus();
        save_corpus(dir.path(), &corpus).unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        assert_eq!(
            bincode::serialize(&corpus).unwrap(),
            bincode::serialize(&loaded).unwrap()
        );
    }

    #[test]
    fn load_order_is_sorted_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = small_corpus();
        // Save in reverse; load must come back sorted by participant id.
        corpus.reverse();
        save_corpus(dir.path(), &corpus).unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        let ids: Vec<&str> = loaded.iter().map(|iv| iv.participant_id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus();
        let path = save_interview(dir.path(), &corpus[0]).unwrap();
        let file = FeatureFile {
            version: FEATURE_FILE_VERSION + 1,
            interview: corpus[0].clone(),
        };
        fs::write(&path, bincode::serialize(&file).unwrap()).unwrap();
        let err = load_interview(&path).unwrap_err();
        assert!(matches!(err, Error::CorruptArtifact { .. }), "{err}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus();
        let path = save_interview(dir.path(), &corpus[0]).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        let err = load_interview(&path).unwrap_err();
        assert!(matches!(err, Error::CorruptArtifact { .. }), "{err}");
    }

    #[test]
    fn empty_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_corpus(dir.path()).is_err());
    }
}
