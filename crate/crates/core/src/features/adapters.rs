//! Acoustic feature adapters.
//!
//! Acoustic functional extraction (the 88-value summary of an answer's
//! audio) is delegated to an adapter: production setups run an external
//! extractor offline and feed its per-slot output in through
//! [`CsvFunctionalsAdapter`]; tests and synthetic pipelines use
//! [`SyntheticAcousticAdapter`]. Adapters must be deterministic and
//! must declare whether they can be called from multiple threads.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::AUDIO_DIM;

/// Identifies one answer span for acoustic extraction.
#[derive(Debug, Clone)]
pub struct AudioSegmentRef<'a> {
    pub participant_id: &'a str,
    /// 1-based slot of the question being answered.
    pub slot: usize,
    /// Answer span in seconds.
    pub span: (f64, f64),
}

/// Source of acoustic functionals.
pub trait AcousticAdapter {
    /// Identifier recorded in caches and manifests.
    fn name(&self) -> &str;
    /// Functionals for one segment; `Ok(None)` means the extractor had
    /// no data for this segment (the slot becomes absent). Configuration
    /// problems must be errors, never empty values.
    fn functionals(&self, seg: &AudioSegmentRef) -> Result<Option<Vec<f64>>>;
    /// Whether concurrent calls are safe.
    fn is_reentrant(&self) -> bool;
}

/// Deterministic pseudo-random functionals keyed by participant and
/// slot. Values depend only on `(seed, participant_id, slot)`.
pub struct SyntheticAcousticAdapter {
    pub seed: u64,
}

impl AcousticAdapter for SyntheticAcousticAdapter {
    fn name(&self) -> &str {
        "synthetic-acoustic"
    }

    fn functionals(&self, seg: &AudioSegmentRef) -> Result<Option<Vec<f64>>> {
        let mut h: u64 = self.seed ^ 0x9e3779b97f4a7c15;
        for b in seg.participant_id.as_bytes() {
            h = h.wrapping_mul(0x100000001b3) ^ u64::from(*b);
        }
        h = h.wrapping_add(seg.slot as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        Ok(Some((0..AUDIO_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect()))
    }

    fn is_reentrant(&self) -> bool {
        true
    }
}

/// Reads per-participant functionals produced by an external extractor.
///
/// Expects `<dir>/<participant_id>.audio.tsv` with one row per slot:
/// `slot<TAB>v1<TAB>...<TAB>v88`. Slots missing from the file are
/// reported as unavailable (absent), a missing file is a configuration
/// error.
pub struct CsvFunctionalsAdapter {
    dir: PathBuf,
}

impl CsvFunctionalsAdapter {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CsvFunctionalsAdapter { dir: dir.into() }
    }

    fn load_participant(&self, participant_id: &str) -> Result<HashMap<usize, Vec<f64>>> {
        let path = self.dir.join(format!("{participant_id}.audio.tsv"));
        let content = std::fs::read_to_string(&path).map_err(|_| Error::Adapter {
            adapter: "csv-functionals".to_string(),
            message: format!("no functionals file at {}", path.display()),
        })?;
        parse_functionals_tsv(&content, &path)
    }
}

fn parse_functionals_tsv(content: &str, path: &Path) -> Result<HashMap<usize, Vec<f64>>> {
    let mut rows = HashMap::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != AUDIO_DIM + 1 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("expected slot + {AUDIO_DIM} values, got {} fields", fields.len()),
            });
        }
        let slot: usize = fields[0].trim().parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            message: format!("invalid slot `{}`", fields[0]),
        })?;
        let mut values = Vec::with_capacity(AUDIO_DIM);
        for f in &fields[1..] {
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("invalid value `{f}`"),
            })?;
            values.push(v);
        }
        rows.insert(slot, values);
    }
    Ok(rows)
}

impl AcousticAdapter for CsvFunctionalsAdapter {
    fn name(&self) -> &str {
        "csv-functionals"
    }

    fn functionals(&self, seg: &AudioSegmentRef) -> Result<Option<Vec<f64>>> {
        let rows = self.load_participant(seg.participant_id)?;
        Ok(rows.get(&seg.slot).cloned())
    }

    fn is_reentrant(&self) -> bool {
        true
    }
}
