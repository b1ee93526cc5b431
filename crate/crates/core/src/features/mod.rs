//! Question-aligned feature matrices.
//!
//! Every interview becomes three fixed-shape matrices — audio 85×88,
//! visual 85×272, text 85×768 — plus per-slot presence masks. Row k
//! holds the features of the answer to question k+1; absent slots are
//! all-zero rows with `mask[k] == false`. Real acoustic functionals and
//! pretrained text encoders live behind adapter traits; the crate ships
//! deterministic synthetic stand-ins.

pub mod adapters;
pub mod cache;
pub mod prep;
pub mod synthetic;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::encoder::TextEncoder;
use crate::error::{Error, Result};
use crate::structuring::{HierarchicalPosition, StructuredInterview};
use crate::taxonomy::BASE_QUESTION_COUNT;

pub use adapters::{AcousticAdapter, AudioSegmentRef, CsvFunctionalsAdapter, SyntheticAcousticAdapter};

/// Number of slots in every feature matrix.
pub const SLOT_COUNT: usize = BASE_QUESTION_COUNT;
/// Width of one acoustic functional vector.
pub const AUDIO_DIM: usize = 88;
/// Number of facial landmarks per frame.
pub const LANDMARK_COUNT: usize = 68;
/// Width of one visual statistics vector: mean and variance of the
/// 136-value landmark coordinate vector.
pub const VISUAL_DIM: usize = 2 * 2 * LANDMARK_COUNT;
/// Width of one text embedding row.
pub const TEXT_DIM: usize = crate::encoder::TEXT_FEATURE_DIM;

/// Class label for an interview.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Depression,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Normal => 0,
            Label::Depression => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::Normal),
            1 => Some(Label::Depression),
            _ => None,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Normal => write!(f, "normal"),
            Label::Depression => write!(f, "depression"),
        }
    }
}

/// The three input channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Audio,
    Visual,
    Text,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Audio, Modality::Visual, Modality::Text];

    pub fn dim(self) -> usize {
        match self {
            Modality::Audio => AUDIO_DIM,
            Modality::Visual => VISUAL_DIM,
            Modality::Text => TEXT_DIM,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Audio => "audio",
            Modality::Visual => "visual",
            Modality::Text => "text",
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// One modality's slot-aligned matrix plus its presence mask.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalityFeatures {
    /// 85×width; row k is all zeros whenever `mask[k]` is false.
    pub matrix: Array2<f64>,
    pub mask: Vec<bool>,
}

impl ModalityFeatures {
    /// All-absent features of the right shape.
    pub fn empty(modality: Modality) -> Self {
        ModalityFeatures {
            matrix: Array2::zeros((SLOT_COUNT, modality.dim())),
            mask: vec![false; SLOT_COUNT],
        }
    }

    /// Install one slot's feature row and mark it present/absent.
    pub fn set_row(&mut self, slot_index: usize, values: &[f64], present: bool) -> Result<()> {
        if slot_index == 0 || slot_index > SLOT_COUNT {
            return Err(Error::validation(format!(
                "slot index {slot_index} outside 1..={SLOT_COUNT}"
            )));
        }
        if values.len() != self.matrix.ncols() {
            return Err(Error::Shape {
                context: "feature row".to_string(),
                expected: format!("{}", self.matrix.ncols()),
                actual: format!("{}", values.len()),
            });
        }
        let row = slot_index - 1;
        if present {
            for (j, v) in values.iter().enumerate() {
                self.matrix[(row, j)] = *v;
            }
        } else {
            for j in 0..self.matrix.ncols() {
                self.matrix[(row, j)] = 0.0;
            }
        }
        self.mask[row] = present;
        Ok(())
    }

    pub fn present_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// A fully embedded interview: three aligned matrices, masks, hierarchy
/// metadata for the occupied slots, and an optional label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddedInterview {
    pub participant_id: String,
    pub label: Option<Label>,
    pub audio: ModalityFeatures,
    pub visual: ModalityFeatures,
    pub text: ModalityFeatures,
    pub hierarchy: Vec<HierarchicalPosition>,
}

impl EmbeddedInterview {
    pub fn modality(&self, m: Modality) -> &ModalityFeatures {
        match m {
            Modality::Audio => &self.audio,
            Modality::Visual => &self.visual,
            Modality::Text => &self.text,
        }
    }

    pub fn modality_mut(&mut self, m: Modality) -> &mut ModalityFeatures {
        match m {
            Modality::Audio => &mut self.audio,
            Modality::Visual => &mut self.visual,
            Modality::Text => &mut self.text,
        }
    }

    /// Slots present in every modality (1-based).
    pub fn jointly_present_slots(&self) -> Vec<usize> {
        (0..SLOT_COUNT)
            .filter(|&k| self.audio.mask[k] && self.visual.mask[k] && self.text.mask[k])
            .map(|k| k + 1)
            .collect()
    }
}

/// Check shapes, mask-zero coupling, and finiteness.
pub fn validate_interview(interview: &EmbeddedInterview) -> Result<()> {
    for m in Modality::ALL {
        let f = interview.modality(m);
        if f.matrix.nrows() != SLOT_COUNT || f.matrix.ncols() != m.dim() {
            return Err(Error::Shape {
                context: format!("{} features of {}", m, interview.participant_id),
                expected: format!("{}x{}", SLOT_COUNT, m.dim()),
                actual: format!("{}x{}", f.matrix.nrows(), f.matrix.ncols()),
            });
        }
        if f.mask.len() != SLOT_COUNT {
            return Err(Error::Shape {
                context: format!("{} mask of {}", m, interview.participant_id),
                expected: format!("{SLOT_COUNT}"),
                actual: format!("{}", f.mask.len()),
            });
        }
        for k in 0..SLOT_COUNT {
            let row = f.matrix.row(k);
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("{} slot {} of {}", m, k + 1, interview.participant_id),
                });
            }
            if !f.mask[k] && row.iter().any(|&v| v != 0.0) {
                return Err(Error::Validation {
                    message: format!(
                        "{}: {} slot {} is masked absent but has nonzero features",
                        interview.participant_id,
                        m,
                        k + 1
                    ),
                });
            }
        }
    }
    Ok(())
}

// ==== Visual features ====

/// One frame of tracked facial landmarks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandmarkFrame {
    /// Timestamp in seconds.
    pub t: f64,
    /// 68 (x, y) points.
    pub points: Vec<[f64; 2]>,
}

/// Mean and population variance of the per-frame 136-value coordinate
/// vector `[x1..x68, y1..y68]`, concatenated mean-first into 272 values.
/// An empty frame list yields a zero vector marked absent.
pub fn compute_landmark_stats(frames: &[LandmarkFrame]) -> Result<(Vec<f64>, bool)> {
    if frames.is_empty() {
        return Ok((vec![0.0; VISUAL_DIM], false));
    }
    let n = frames.len() as f64;
    let coord_len = 2 * LANDMARK_COUNT;
    let mut mean = vec![0.0; coord_len];
    for (fi, frame) in frames.iter().enumerate() {
        if frame.points.len() != LANDMARK_COUNT {
            return Err(Error::Shape {
                context: format!("landmark frame {fi}"),
                expected: format!("{LANDMARK_COUNT} points"),
                actual: format!("{}", frame.points.len()),
            });
        }
        for (pi, p) in frame.points.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::NonFinite {
                    context: format!("landmark frame {fi} point {pi}"),
                });
            }
            mean[pi] += p[0];
            mean[LANDMARK_COUNT + pi] += p[1];
        }
    }
    for v in mean.iter_mut() {
        *v /= n;
    }
    let mut var = vec![0.0; coord_len];
    for frame in frames {
        for (pi, p) in frame.points.iter().enumerate() {
            var[pi] += (p[0] - mean[pi]).powi(2);
            var[LANDMARK_COUNT + pi] += (p[1] - mean[LANDMARK_COUNT + pi]).powi(2);
        }
    }
    for v in var.iter_mut() {
        *v /= n;
    }
    let mut out = mean;
    out.extend(var);
    Ok((out, true))
}

/// Pick at most one frame per whole second inside the span.
pub fn sample_one_fps(frames: &[LandmarkFrame], span: (f64, f64)) -> Vec<LandmarkFrame> {
    let mut out: Vec<LandmarkFrame> = Vec::new();
    let mut last_bucket: Option<i64> = None;
    for f in frames {
        if f.t < span.0 || f.t > span.1 {
            continue;
        }
        let bucket = f.t.floor() as i64;
        if last_bucket != Some(bucket) {
            out.push(f.clone());
            last_bucket = Some(bucket);
        }
    }
    out
}

/// Parse a JSON-lines landmark series: `{"t": sec, "points": [[x,y], ...68]}`.
pub fn parse_landmarks_jsonl(content: &str, origin: &str) -> Result<Vec<LandmarkFrame>> {
    let mut frames = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let frame: LandmarkFrame = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        frames.push(frame);
    }
    Ok(frames)
}

/// Visual features for one answer span: 1 fps sampling, then landmark
/// statistics. No frames in the span → zero row marked absent.
pub fn extract_visual_features(
    frames: &[LandmarkFrame],
    span: (f64, f64),
) -> Result<(Vec<f64>, bool)> {
    let sampled = sample_one_fps(frames, span);
    compute_landmark_stats(&sampled)
}

// ==== Audio features ====

/// Acoustic functionals for one answer span via the configured adapter.
/// A zero-length span yields a zero row marked absent without invoking
/// the adapter; an adapter that cannot serve the segment is an error,
/// never a silent zero row.
pub fn extract_audio_features(
    seg: &AudioSegmentRef,
    adapter: &dyn AcousticAdapter,
) -> Result<(Vec<f64>, bool)> {
    if seg.span.1 <= seg.span.0 {
        return Ok((vec![0.0; AUDIO_DIM], false));
    }
    let values = adapter.functionals(seg)?;
    match values {
        None => Ok((vec![0.0; AUDIO_DIM], false)),
        Some(v) => {
            if v.len() != AUDIO_DIM {
                return Err(Error::Adapter {
                    adapter: adapter.name().to_string(),
                    message: format!("expected {AUDIO_DIM} functionals, got {}", v.len()),
                });
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::Adapter {
                    adapter: adapter.name().to_string(),
                    message: format!("non-finite functional for slot {}", seg.slot),
                });
            }
            Ok((v, true))
        }
    }
}

// ==== Text features ====

/// Sequence embedding of one answer. Empty answers yield a zero row
/// marked absent.
pub fn extract_text_features(
    answer_text: &str,
    encoder: &dyn TextEncoder,
) -> Result<(Vec<f64>, bool)> {
    if answer_text.trim().is_empty() {
        return Ok((vec![0.0; TEXT_DIM], false));
    }
    let v = encoder.encode_sequence(answer_text)?;
    if v.len() != TEXT_DIM {
        return Err(Error::Shape {
            context: format!("text encoder `{}` output", encoder.name()),
            expected: format!("{TEXT_DIM}"),
            actual: format!("{}", v.len()),
        });
    }
    Ok((v, true))
}

// ==== Assembly ====

/// Raw inputs behind the three modalities. `None` marks a modality the
/// caller explicitly runs without: its rows stay zero with absent masks.
pub struct FeatureSources<'a> {
    pub text_encoder: Option<&'a dyn TextEncoder>,
    pub acoustic: Option<&'a dyn AcousticAdapter>,
    pub landmarks: Option<&'a [LandmarkFrame]>,
}

/// Build the aligned matrices for one structured interview.
pub fn embed_interview(
    structured: &StructuredInterview,
    label: Option<Label>,
    sources: &FeatureSources,
) -> Result<EmbeddedInterview> {
    let mut out = EmbeddedInterview {
        participant_id: structured.participant_id.clone(),
        label,
        audio: ModalityFeatures::empty(Modality::Audio),
        visual: ModalityFeatures::empty(Modality::Visual),
        text: ModalityFeatures::empty(Modality::Text),
        hierarchy: structured.hierarchy.clone(),
    };
    for (slot0, assignment) in structured.layout.assignments.iter().enumerate() {
        let Some(seg_pos) = assignment else { continue };
        let seg = &structured.segments[*seg_pos];
        let slot = slot0 + 1;

        if let Some(encoder) = sources.text_encoder {
            let (row, present) = extract_text_features(&seg.answer_text, encoder)?;
            out.text.set_row(slot, &row, present)?;
        }
        if let Some(adapter) = sources.acoustic {
            let seg_ref = AudioSegmentRef {
                participant_id: &structured.participant_id,
                slot,
                span: seg.answer_span,
            };
            let (row, present) = extract_audio_features(&seg_ref, adapter)?;
            out.audio.set_row(slot, &row, present)?;
        }
        if let Some(frames) = sources.landmarks {
            let (row, present) = extract_visual_features(frames, seg.answer_span)?;
            out.visual.set_row(slot, &row, present)?;
        }
    }
    validate_interview(&out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64, x1: f64) -> LandmarkFrame {
        let mut points = vec![[0.0, 0.0]; LANDMARK_COUNT];
        points[0] = [x1, 0.5];
        LandmarkFrame { t, points }
    }

    #[test]
    fn landmark_stats_mean_and_population_variance() {
        // Two frames with x1 = 1 and 3: mean 2, population variance 1.
        let frames = vec![frame(0.0, 1.0), frame(1.0, 3.0)];
        let (stats, present) = compute_landmark_stats(&frames).unwrap();
        assert!(present);
        assert_eq!(stats.len(), VISUAL_DIM);
        assert_eq!(stats[0], 2.0); // mean of x1
        assert_eq!(stats[2 * LANDMARK_COUNT], 1.0); // variance of x1
        assert_eq!(stats[LANDMARK_COUNT], 0.5); // mean of y1
        assert_eq!(stats[3 * LANDMARK_COUNT], 0.0); // variance of y1
    }

    #[test]
    fn landmark_stats_empty_is_absent_zero() {
        let (stats, present) = compute_landmark_stats(&[]).unwrap();
        assert!(!present);
        assert!(stats.iter().all(|&v| v == 0.0));
        assert_eq!(stats.len(), VISUAL_DIM);
    }

    #[test]
    fn landmark_stats_rejects_wrong_point_count() {
        let bad = LandmarkFrame {
            t: 0.0,
            points: vec![[0.0, 0.0]; 67],
        };
        assert!(compute_landmark_stats(&[bad]).is_err());
    }

    #[test]
    fn one_fps_sampling_picks_first_frame_per_second() {
        let frames: Vec<LandmarkFrame> = (0..40)
            .map(|i| frame(i as f64 * 0.25, i as f64))
            .collect();
        let sampled = sample_one_fps(&frames, (0.0, 10.0));
        assert_eq!(sampled.len(), 10);
        assert_eq!(sampled[0].t, 0.0);
        assert_eq!(sampled[1].t, 1.0);
        // Span filtering happens before bucketing.
        let sampled = sample_one_fps(&frames, (2.1, 3.9));
        assert_eq!(sampled.len(), 2);
        assert_eq!(sampled[0].t, 2.25);
        assert_eq!(sampled[1].t, 3.0);
    }

    #[test]
    fn set_row_enforces_bounds_and_width() {
        let mut f = ModalityFeatures::empty(Modality::Audio);
        assert!(f.set_row(0, &vec![0.0; AUDIO_DIM], true).is_err());
        assert!(f.set_row(86, &vec![0.0; AUDIO_DIM], true).is_err());
        assert!(f.set_row(1, &vec![0.0; 87], true).is_err());
        assert!(f.set_row(1, &vec![1.0; AUDIO_DIM], true).is_ok());
        assert_eq!(f.present_count(), 1);
    }

    #[test]
    fn validate_catches_mask_zero_violation() {
        let mut iv = EmbeddedInterview {
            participant_id: "p1".into(),
            label: None,
            audio: ModalityFeatures::empty(Modality::Audio),
            visual: ModalityFeatures::empty(Modality::Visual),
            text: ModalityFeatures::empty(Modality::Text),
            hierarchy: vec![],
        };
        validate_interview(&iv).unwrap();
        iv.audio.matrix[(4, 0)] = 1.0; // nonzero but mask false
        assert!(validate_interview(&iv).is_err());
    }

    #[test]
    fn validate_catches_non_finite() {
        let mut iv = EmbeddedInterview {
            participant_id: "p1".into(),
            label: None,
            audio: ModalityFeatures::empty(Modality::Audio),
            visual: ModalityFeatures::empty(Modality::Visual),
            text: ModalityFeatures::empty(Modality::Text),
            hierarchy: vec![],
        };
        iv.text.mask[0] = true;
        iv.text.matrix[(0, 0)] = f64::NAN;
        assert!(validate_interview(&iv).is_err());
    }

    #[test]
    fn empty_answer_text_is_absent() {
        let enc = crate::encoder::HashedContextEncoder::default();
        let (row, present) = extract_text_features("   ", &enc).unwrap();
        assert!(!present);
        assert!(row.iter().all(|&v| v == 0.0));
        let (_, present) = extract_text_features("i kept busy", &enc).unwrap();
        assert!(present);
    }
}
