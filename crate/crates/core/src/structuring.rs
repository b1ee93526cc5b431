//! Transcript structuring: question matching, answer grouping,
//! follow-up chains, and the 85-slot layout.
//!
//! A transcript is a time-ordered list of interviewer/participant turns.
//! Each interviewer turn that matches a canonical question opens a
//! segment; the participant turns that follow (up to the next matched
//! question) form its answer. Follow-up questions inherit the topic of
//! the question they probe: a `follow_up` segment gets
//! `chain_depth = previous + 1` and the previous segment's
//! `effective_topic_slot`, while a `primary` segment resets the chain.
//! Each matched question keeps its own slot in the 85-slot layout;
//! inherited topics ride along as metadata.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{SimilarityIndex, TextEncoder};
use crate::error::{Error, Result};
use crate::taxonomy::{
    is_function_word, QuestionRole, QuestionTaxonomy, BASE_QUESTION_COUNT,
};
use crate::textnorm::{normalize_question, tokenize};

// ==== Transcript turns and readers ====

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Interviewer,
    Participant,
}

/// One utterance with its time span in seconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub speaker: Speaker,
    pub start: f64,
    pub end: f64,
    pub text: String,
}

fn validate_turns(turns: &[TranscriptTurn], origin: &str) -> Result<()> {
    if turns.is_empty() {
        return Err(Error::validation(format!("{origin}: empty transcript")));
    }
    let mut prev_start = f64::NEG_INFINITY;
    for (i, t) in turns.iter().enumerate() {
        if !t.start.is_finite() || !t.end.is_finite() {
            return Err(Error::NonFinite {
                context: format!("{origin}: turn {} time span", i + 1),
            });
        }
        if t.end < t.start {
            return Err(Error::validation(format!(
                "{origin}: turn {} ends before it starts",
                i + 1
            )));
        }
        if t.start < prev_start {
            return Err(Error::validation(format!(
                "{origin}: turns are not sorted by start time (turn {})",
                i + 1
            )));
        }
        prev_start = t.start;
    }
    if !turns.iter().any(|t| t.speaker == Speaker::Interviewer) {
        return Err(Error::validation(format!(
            "{origin}: transcript has no interviewer turns"
        )));
    }
    Ok(())
}

/// Parse a JSON-lines transcript: one object per line with
/// `speaker` (interviewer|participant), `start`, `end`, `text`.
pub fn parse_transcript_jsonl(content: &str, origin: &str) -> Result<Vec<TranscriptTurn>> {
    let mut turns = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let turn: TranscriptTurn = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        turns.push(turn);
    }
    validate_turns(&turns, origin)?;
    Ok(turns)
}

/// Parse a tab-separated transcript with columns
/// `start_time  stop_time  speaker  value`; the speaker column maps
/// `ellie` to the interviewer and `participant` to the participant.
/// An optional header row is skipped.
pub fn parse_transcript_tsv(content: &str, origin: &str) -> Result<Vec<TranscriptTurn>> {
    let mut turns = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let display = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if lineno == 0 && fields[0].trim().eq_ignore_ascii_case("start_time") {
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: display,
                message: format!("expected 4 tab-separated columns, got {}", fields.len()),
            });
        }
        let start: f64 = fields[0].trim().parse().map_err(|_| Error::Parse {
            path: origin.to_string(),
            line: display,
            message: format!("invalid start_time `{}`", fields[0]),
        })?;
        let end: f64 = fields[1].trim().parse().map_err(|_| Error::Parse {
            path: origin.to_string(),
            line: display,
            message: format!("invalid stop_time `{}`", fields[1]),
        })?;
        let speaker = match fields[2].trim().to_lowercase().as_str() {
            "ellie" | "interviewer" => Speaker::Interviewer,
            "participant" => Speaker::Participant,
            other => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: display,
                    message: format!("unknown speaker `{other}`"),
                })
            }
        };
        turns.push(TranscriptTurn {
            speaker,
            start,
            end,
            text: fields[3].trim().to_string(),
        });
    }
    validate_turns(&turns, origin)?;
    Ok(turns)
}

/// Read a transcript file, dispatching on extension: `.jsonl`/`.json`
/// are parsed as JSON lines, anything else as the tab-separated format.
pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptTurn>> {
    let content =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let origin = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => parse_transcript_jsonl(&content, &origin),
        _ => parse_transcript_tsv(&content, &origin),
    }
}

// ==== Question matching ====

/// How interviewer utterances are matched to taxonomy questions.
pub enum MatchStrategy<'a> {
    /// Normalized exact text matches only.
    Exact,
    /// Exact matches first, then token-similarity mapping; questions
    /// resembling nothing are appended as extension entries when
    /// `allow_append` is set, otherwise reported unmatched.
    Similarity {
        encoder: &'a dyn TextEncoder,
        allow_append: bool,
    },
}

/// Minimum token count for an interviewer utterance to be treated as a
/// candidate question rather than a backchannel ("mhm", "nice").
/// Single-token taxonomy questions ("why") still match exactly.
pub const MIN_QUESTION_TOKENS: usize = 2;

/// Result of mapping one unseen question.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingOutcome {
    pub entry_index: usize,
    pub entry_text: String,
    pub role: QuestionRole,
    /// Best similarity over all entries (1.0 for exact text).
    pub similarity: f64,
    /// Mean/std/threshold of the per-entry similarity profile.
    pub mean_similarity: f64,
    pub threshold: f64,
    /// True when the question was appended as a new extension entry.
    pub appended: bool,
}

/// Guess the role of a question that matched nothing: short prompts made
/// only of function words ("can you tell me more") probe the previous
/// topic, anything with a topic-bearing content word opens its own.
pub fn guess_role(text: &str) -> QuestionRole {
    let tokens = tokenize(text);
    let has_content_word = tokens.iter().any(|t| !is_function_word(t));
    if tokens.len() <= 5 && !has_content_word {
        QuestionRole::FollowUp
    } else {
        QuestionRole::Primary
    }
}

/// Map one question to the taxonomy by token similarity, appending it as
/// an extension entry when it resembles nothing (best score under the
/// profile threshold). Exact canonical text short-circuits at 1.0.
pub fn map_unseen_question(
    text: &str,
    taxonomy: &mut QuestionTaxonomy,
    encoder: &dyn TextEncoder,
) -> Result<MappingOutcome> {
    let mut index = SimilarityIndex::build(taxonomy, encoder)?;
    map_with_index(text, taxonomy, encoder, &mut index, true)
}

fn map_with_index(
    text: &str,
    taxonomy: &mut QuestionTaxonomy,
    encoder: &dyn TextEncoder,
    index: &mut SimilarityIndex,
    allow_append: bool,
) -> Result<MappingOutcome> {
    if let Some(entry) = taxonomy.by_text(text) {
        return Ok(MappingOutcome {
            entry_index: entry.index,
            entry_text: entry.text.clone(),
            role: entry.role,
            similarity: 1.0,
            mean_similarity: 1.0,
            threshold: 1.0,
            appended: false,
        });
    }
    let profile = index.profile(text, encoder)?;
    if profile.accepted() {
        let entry = taxonomy
            .by_index(profile.best_index)
            .expect("profile indexes an existing entry");
        Ok(MappingOutcome {
            entry_index: entry.index,
            entry_text: entry.text.clone(),
            role: entry.role,
            similarity: profile.best_similarity,
            mean_similarity: profile.mean,
            threshold: profile.threshold,
            appended: false,
        })
    } else if allow_append {
        let role = guess_role(text);
        let entry = taxonomy.append_extension(text, role)?.clone();
        index.push_entry(entry.index, &entry.text, encoder)?;
        Ok(MappingOutcome {
            entry_index: entry.index,
            entry_text: entry.text,
            role,
            similarity: profile.best_similarity,
            mean_similarity: profile.mean,
            threshold: profile.threshold,
            appended: true,
        })
    } else {
        Err(Error::Validation {
            message: format!(
                "question \"{}\" matches no taxonomy entry (best {:.3} < threshold {:.3})",
                normalize_question(text),
                profile.best_similarity,
                profile.threshold
            ),
        })
    }
}

// ==== Segmentation ====

/// One question-answer segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QASegment {
    /// Interviewer utterance as spoken.
    pub question_text: String,
    /// Matched taxonomy entry (1-based; >85 for extensions).
    pub matched_index: usize,
    pub matched_text: String,
    pub role: QuestionRole,
    /// Match confidence: 1.0 for exact text, the profile score otherwise.
    pub similarity: f64,
    pub question_span: (f64, f64),
    /// Span of the answer turns; collapses to the question end when the
    /// participant said nothing before the next question.
    pub answer_span: (f64, f64),
    pub answer_turns: Vec<TranscriptTurn>,
    /// Answer turn texts joined with single spaces.
    pub answer_text: String,
}

/// Non-fatal observations from segmentation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SegmentationReport {
    /// Interviewer utterances of question length that matched nothing.
    pub unmatched_questions: Vec<String>,
    /// Short interviewer acknowledgements that were skipped.
    pub backchannels: Vec<String>,
    /// Participant turns before the first matched question.
    pub leading_participant_turns: Vec<String>,
    /// Extension entries appended during matching.
    pub extensions_appended: Vec<usize>,
}

enum TurnMatch {
    Matched(MappingOutcome),
    Backchannel,
    Unmatched,
}

/// Split a transcript into question-answer segments.
///
/// Every interviewer turn that matches a taxonomy question (per the
/// strategy) opens a segment; participant turns accumulate into the open
/// segment's answer. Unmatched interviewer turns are reported and do not
/// close the open segment. Errors if no question matches at all.
pub fn segment_transcript(
    turns: &[TranscriptTurn],
    taxonomy: &mut QuestionTaxonomy,
    strategy: &MatchStrategy,
) -> Result<(Vec<QASegment>, SegmentationReport)> {
    validate_turns(turns, "<transcript>")?;
    let mut report = SegmentationReport::default();
    let mut segments: Vec<QASegment> = Vec::new();
    let mut open: Option<QASegment> = None;

    let mut sim_index = match strategy {
        MatchStrategy::Exact => None,
        MatchStrategy::Similarity { encoder, .. } => {
            Some(SimilarityIndex::build(taxonomy, *encoder)?)
        }
    };

    for turn in turns {
        match turn.speaker {
            Speaker::Participant => {
                if let Some(seg) = open.as_mut() {
                    seg.answer_turns.push(turn.clone());
                } else {
                    report.leading_participant_turns.push(turn.text.clone());
                }
            }
            Speaker::Interviewer => {
                match match_turn(turn, taxonomy, strategy, sim_index.as_mut())? {
                    TurnMatch::Backchannel => report.backchannels.push(turn.text.clone()),
                    TurnMatch::Unmatched => report.unmatched_questions.push(turn.text.clone()),
                    TurnMatch::Matched(outcome) => {
                        if outcome.appended {
                            report.extensions_appended.push(outcome.entry_index);
                        }
                        if let Some(seg) = open.take() {
                            segments.push(finalize_segment(seg));
                        }
                        open = Some(QASegment {
                            question_text: turn.text.clone(),
                            matched_index: outcome.entry_index,
                            matched_text: outcome.entry_text,
                            role: outcome.role,
                            similarity: outcome.similarity,
                            question_span: (turn.start, turn.end),
                            answer_span: (turn.end, turn.end),
                            answer_turns: Vec::new(),
                            answer_text: String::new(),
                        });
                    }
                }
            }
        }
    }
    if let Some(seg) = open.take() {
        segments.push(finalize_segment(seg));
    }

    if segments.is_empty() {
        return Err(Error::Validation {
            message: format!(
                "no interviewer utterance matched a taxonomy question; unmatched: [{}]",
                report.unmatched_questions.join("; ")
            ),
        });
    }
    Ok((segments, report))
}

fn match_turn(
    turn: &TranscriptTurn,
    taxonomy: &mut QuestionTaxonomy,
    strategy: &MatchStrategy,
    sim_index: Option<&mut SimilarityIndex>,
) -> Result<TurnMatch> {
    let normalized = normalize_question(&turn.text);
    if normalized.is_empty() {
        return Ok(TurnMatch::Backchannel);
    }
    if let Some(entry) = taxonomy.by_text(&normalized) {
        return Ok(TurnMatch::Matched(MappingOutcome {
            entry_index: entry.index,
            entry_text: entry.text.clone(),
            role: entry.role,
            similarity: 1.0,
            mean_similarity: 1.0,
            threshold: 1.0,
            appended: false,
        }));
    }
    if tokenize(&normalized).len() < MIN_QUESTION_TOKENS {
        return Ok(TurnMatch::Backchannel);
    }
    match strategy {
        MatchStrategy::Exact => Ok(TurnMatch::Unmatched),
        MatchStrategy::Similarity {
            encoder,
            allow_append,
        } => {
            let index = sim_index.expect("similarity index built for similarity strategy");
            match map_with_index(&normalized, taxonomy, *encoder, index, *allow_append) {
                Ok(outcome) => Ok(TurnMatch::Matched(outcome)),
                Err(Error::Validation { .. }) => Ok(TurnMatch::Unmatched),
                Err(e) => Err(e),
            }
        }
    }
}

fn finalize_segment(mut seg: QASegment) -> QASegment {
    if !seg.answer_turns.is_empty() {
        let start = seg.answer_turns.first().unwrap().start;
        let end = seg
            .answer_turns
            .iter()
            .map(|t| t.end)
            .fold(f64::NEG_INFINITY, f64::max);
        seg.answer_span = (start, end);
        seg.answer_text = seg
            .answer_turns
            .iter()
            .map(|t| t.text.trim())
            .filter(|t| !t.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
    }
    seg
}

// ==== Hierarchy ====

/// Where a segment sits in the question hierarchy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchicalPosition {
    /// The segment's own slot (its matched taxonomy index).
    pub slot_index: usize,
    pub role: QuestionRole,
    /// Topic slot this segment elaborates: itself for primary questions,
    /// inherited from the previous segment for follow-ups.
    pub effective_topic_slot: usize,
    /// 0 for primary questions, parent depth + 1 for follow-ups.
    pub chain_depth: usize,
    /// Follow-up with nothing before it: keeps its own slot at depth 1.
    pub orphan: bool,
}

/// Assign chain depths and effective topics in interview order.
pub fn assign_hierarchy(segments: &[QASegment]) -> Vec<HierarchicalPosition> {
    let mut out: Vec<HierarchicalPosition> = Vec::with_capacity(segments.len());
    for seg in segments {
        let pos = match seg.role {
            QuestionRole::Primary => HierarchicalPosition {
                slot_index: seg.matched_index,
                role: seg.role,
                effective_topic_slot: seg.matched_index,
                chain_depth: 0,
                orphan: false,
            },
            QuestionRole::FollowUp => match out.last() {
                Some(prev) => HierarchicalPosition {
                    slot_index: seg.matched_index,
                    role: seg.role,
                    effective_topic_slot: prev.effective_topic_slot,
                    chain_depth: prev.chain_depth + 1,
                    orphan: false,
                },
                None => HierarchicalPosition {
                    slot_index: seg.matched_index,
                    role: seg.role,
                    effective_topic_slot: seg.matched_index,
                    chain_depth: 1,
                    orphan: true,
                },
            },
        };
        out.push(pos);
    }
    out
}

// ==== Slot layout ====

/// Placement of segments into the fixed 85-slot frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotLayout {
    /// `assignments[k]` is the segment position occupying slot k+1.
    pub assignments: Vec<Option<usize>>,
    /// `(slot, segment position)` pairs dropped because the slot was
    /// already taken by an earlier segment.
    pub collisions: Vec<(usize, usize)>,
    /// Segment positions matched to extension entries (index > 85),
    /// which have no slot in the fixed frame.
    pub out_of_range: Vec<usize>,
}

impl SlotLayout {
    /// Per-slot presence flags (length 85).
    pub fn present_mask(&self) -> Vec<bool> {
        self.assignments.iter().map(|a| a.is_some()).collect()
    }

    pub fn occupied_count(&self) -> usize {
        self.assignments.iter().filter(|a| a.is_some()).count()
    }
}

/// Place each segment at its matched index; first occupant wins.
pub fn build_slot_layout(segments: &[QASegment]) -> SlotLayout {
    let mut layout = SlotLayout {
        assignments: vec![None; BASE_QUESTION_COUNT],
        collisions: Vec::new(),
        out_of_range: Vec::new(),
    };
    for (pos, seg) in segments.iter().enumerate() {
        if seg.matched_index == 0 || seg.matched_index > BASE_QUESTION_COUNT {
            layout.out_of_range.push(pos);
            continue;
        }
        let slot = seg.matched_index - 1;
        match layout.assignments[slot] {
            None => layout.assignments[slot] = Some(pos),
            Some(_) => layout.collisions.push((seg.matched_index, pos)),
        }
    }
    layout
}

// ==== Structured interview ====

/// A fully structured interview ready for feature extraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuredInterview {
    pub participant_id: String,
    pub segments: Vec<QASegment>,
    pub hierarchy: Vec<HierarchicalPosition>,
    pub layout: SlotLayout,
    pub report: SegmentationReport,
}

/// Run the full structuring pipeline on one transcript.
pub fn structure_interview(
    participant_id: &str,
    turns: &[TranscriptTurn],
    taxonomy: &mut QuestionTaxonomy,
    strategy: &MatchStrategy,
) -> Result<StructuredInterview> {
    let (segments, report) = segment_transcript(turns, taxonomy, strategy)?;
    let hierarchy = assign_hierarchy(&segments);
    let layout = build_slot_layout(&segments);
    Ok(StructuredInterview {
        participant_id: participant_id.to_string(),
        segments,
        hierarchy,
        layout,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::HashedContextEncoder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn turn(speaker: Speaker, start: f64, text: &str) -> TranscriptTurn {
        TranscriptTurn {
            speaker,
            start,
            end: start + 1.0,
            text: text.to_string(),
        }
    }

    fn iv(start: f64, text: &str) -> TranscriptTurn {
        turn(Speaker::Interviewer, start, text)
    }

    fn pt(start: f64, text: &str) -> TranscriptTurn {
        turn(Speaker::Participant, start, text)
    }

    #[test]
    fn empty_transcript_is_an_error() {
        let mut tax = QuestionTaxonomy::builtin();
        let err = segment_transcript(&[], &mut tax, &MatchStrategy::Exact).unwrap_err();
        assert!(err.to_string().contains("empty transcript"));
    }

    #[test]
    fn unsorted_turns_are_rejected() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![iv(5.0, "where are you from originally"), pt(1.0, "ohio")];
        assert!(segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).is_err());
    }

    #[test]
    fn zero_matches_error_lists_unmatched() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![iv(0.0, "please state your favorite color"), pt(1.0, "blue")];
        let err = segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).unwrap_err();
        assert!(err.to_string().contains("favorite color"), "{err}");
    }

    #[test]
    fn basic_two_question_segmentation() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![
            iv(0.0, "where are you from originally"),
            pt(2.0, "i grew up in ohio"),
            pt(4.0, "moved out here for work"),
            iv(6.0, "what do you do now"),
            pt(8.0, "i teach high school"),
        ];
        let (segments, report) =
            segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).unwrap();
        assert_eq!(segments.len(), 2);
        assert_eq!(segments[0].matched_index, 3);
        assert_eq!(segments[0].answer_turns.len(), 2);
        assert_eq!(segments[0].answer_text, "i grew up in ohio moved out here for work");
        assert_eq!(segments[0].answer_span, (2.0, 5.0));
        assert_eq!(segments[1].matched_index, 39);
        assert_eq!(segments[1].answer_turns.len(), 1);
        assert!(report.unmatched_questions.is_empty());
    }

    #[test]
    fn consecutive_questions_leave_empty_answer() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![
            iv(0.0, "do you feel down"),
            iv(2.0, "do you have roommates"),
            pt(4.0, "just my cat"),
        ];
        let (segments, _) = segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).unwrap();
        assert_eq!(segments.len(), 2);
        assert!(segments[0].answer_turns.is_empty());
        assert_eq!(segments[0].answer_text, "");
        // Empty answer span collapses to the question end.
        assert_eq!(segments[0].answer_span, (1.0, 1.0));
        assert_eq!(segments[1].answer_turns.len(), 1);
    }

    #[test]
    fn backchannels_do_not_split_answers() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![
            iv(0.0, "how are you doing today"),
            pt(2.0, "pretty good i think"),
            iv(4.0, "mhm"),
            pt(6.0, "yeah been keeping busy"),
        ];
        let (segments, report) =
            segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).unwrap();
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].answer_turns.len(), 2);
        assert_eq!(report.backchannels, vec!["mhm".to_string()]);
        assert!(report.unmatched_questions.is_empty());
    }

    #[test]
    fn leading_participant_turns_are_reported() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![
            pt(0.0, "hello"),
            iv(1.0, "how are you doing today"),
            pt(2.0, "fine"),
        ];
        let (segments, report) =
            segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).unwrap();
        assert_eq!(segments.len(), 1);
        assert_eq!(report.leading_participant_turns, vec!["hello".to_string()]);
    }

    #[test]
    fn single_token_canonical_question_matches_exactly() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![
            iv(0.0, "do you feel down"),
            pt(1.5, "sometimes"),
            iv(3.0, "why"),
            pt(4.0, "work mostly"),
        ];
        let (segments, _) = segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).unwrap();
        assert_eq!(segments.len(), 2);
        assert_eq!(segments[1].matched_index, 68);
        assert_eq!(segments[1].role, QuestionRole::FollowUp);
    }

    #[test]
    fn hierarchy_canonical_chain_school_working_hard() {
        // Primary, then a similarity-mapped follow-up, then an exact
        // follow-up: depths 0, 1, 2, all inheriting the primary's topic.
        let mut tax = QuestionTaxonomy::builtin();
        let enc = HashedContextEncoder::default();
        let turns = vec![
            iv(0.0, "what did you study at school"),
            pt(2.0, "biology at a community college"),
            iv(4.0, "are you still working in that"),
            pt(6.0, "no i switched to sales"),
            iv(8.0, "how hard is that"),
            pt(10.0, "some weeks are rough"),
        ];
        let strategy = MatchStrategy::Similarity {
            encoder: &enc,
            allow_append: false,
        };
        let (segments, _) = segment_transcript(&turns, &mut tax, &strategy).unwrap();
        assert_eq!(segments.len(), 3);
        assert_eq!(segments[0].matched_index, 12);
        assert_eq!(segments[1].matched_index, 71, "mapped to `are you still doing that`");
        assert_eq!(segments[2].matched_index, 69);

        let hierarchy = assign_hierarchy(&segments);
        assert_eq!(
            hierarchy.iter().map(|h| h.chain_depth).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        assert!(hierarchy.iter().all(|h| h.effective_topic_slot == 12));
        assert!(hierarchy.iter().all(|h| !h.orphan));
    }

    #[test]
    fn primary_resets_chain() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![
            iv(0.0, "what did you study at school"),
            iv(2.0, "how hard is that"),
            iv(4.0, "what do you do now"),
            iv(6.0, "can you tell me about that"),
        ];
        let (segments, _) = segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).unwrap();
        let hierarchy = assign_hierarchy(&segments);
        assert_eq!(
            hierarchy.iter().map(|h| h.chain_depth).collect::<Vec<_>>(),
            vec![0, 1, 0, 1]
        );
        assert_eq!(
            hierarchy
                .iter()
                .map(|h| h.effective_topic_slot)
                .collect::<Vec<_>>(),
            vec![12, 12, 39, 39]
        );
    }

    #[test]
    fn orphan_leading_follow_up_keeps_own_slot() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![iv(0.0, "can you tell me about that"), pt(1.5, "well sure")];
        let (segments, _) = segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).unwrap();
        let hierarchy = assign_hierarchy(&segments);
        assert_eq!(hierarchy.len(), 1);
        assert_eq!(hierarchy[0].slot_index, 67);
        assert_eq!(hierarchy[0].effective_topic_slot, 67);
        assert_eq!(hierarchy[0].chain_depth, 1);
        assert!(hierarchy[0].orphan);
    }

    #[test]
    fn layout_places_segments_and_reports_collisions() {
        let mut tax = QuestionTaxonomy::builtin();
        let turns = vec![
            iv(0.0, "do you feel down"),
            pt(1.0, "a bit"),
            iv(2.0, "what do you do to relax"),
            pt(3.0, "i run"),
            iv(4.0, "do you feel down"),
            pt(5.0, "same as before"),
        ];
        let (segments, _) = segment_transcript(&turns, &mut tax, &MatchStrategy::Exact).unwrap();
        let layout = build_slot_layout(&segments);
        assert_eq!(layout.occupied_count(), 2);
        assert_eq!(layout.assignments[46], Some(0)); // slot 47, first occurrence
        assert_eq!(layout.assignments[65], Some(1)); // slot 66
        assert_eq!(layout.collisions, vec![(47, 2)]);
        let mask = layout.present_mask();
        assert_eq!(mask.len(), 85);
        assert_eq!(mask.iter().filter(|&&m| m).count(), 2);
    }

    #[test]
    fn extension_matches_are_out_of_range_in_layout() {
        let mut tax = QuestionTaxonomy::builtin();
        let enc = HashedContextEncoder::default();
        let strategy = MatchStrategy::Similarity {
            encoder: &enc,
            allow_append: true,
        };
        let turns = vec![
            iv(0.0, "where are you from originally"),
            pt(1.0, "texas"),
            iv(2.0, "describe your morning routine in detail"),
            pt(3.0, "coffee then email"),
        ];
        let (segments, report) = segment_transcript(&turns, &mut tax, &strategy).unwrap();
        assert_eq!(segments.len(), 2);
        assert_eq!(report.extensions_appended, vec![86]);
        assert_eq!(segments[1].matched_index, 86);
        let layout = build_slot_layout(&segments);
        assert_eq!(layout.occupied_count(), 1);
        assert_eq!(layout.out_of_range, vec![1]);
    }

    #[test]
    fn map_unseen_accepts_close_paraphrase() {
        let mut tax = QuestionTaxonomy::builtin();
        let enc = HashedContextEncoder::default();
        let outcome =
            map_unseen_question("where do you come from originally", &mut tax, &enc).unwrap();
        assert_eq!(outcome.entry_index, 3);
        assert!(!outcome.appended);
        assert!(outcome.similarity >= outcome.threshold);
        assert_eq!(tax.len(), 85);
    }

    #[test]
    fn map_unseen_appends_unrelated_question() {
        let mut tax = QuestionTaxonomy::builtin();
        let enc = HashedContextEncoder::default();
        let outcome =
            map_unseen_question("describe your morning routine in detail", &mut tax, &enc)
                .unwrap();
        assert!(outcome.appended);
        assert_eq!(outcome.entry_index, 86);
        assert_eq!(outcome.role, QuestionRole::Primary);
        assert!(outcome.similarity < outcome.threshold);
        assert_eq!(tax.len(), 86);
        // Second call sees the extension and maps to it exactly.
        let again =
            map_unseen_question("describe your morning routine in detail", &mut tax, &enc)
                .unwrap();
        assert_eq!(again.entry_index, 86);
        assert!(!again.appended);
        assert_eq!(again.similarity, 1.0);
    }

    #[test]
    fn exact_canonical_text_is_a_fixed_point() {
        let mut tax = QuestionTaxonomy::builtin();
        let enc = HashedContextEncoder::default();
        let outcome = map_unseen_question("How hard is that?", &mut tax, &enc).unwrap();
        assert_eq!(outcome.entry_index, 69);
        assert_eq!(outcome.similarity, 1.0);
        assert!(!outcome.appended);
    }

    #[test]
    fn guess_role_examples() {
        assert_eq!(guess_role("can you tell me more"), QuestionRole::FollowUp);
        assert_eq!(guess_role("and then"), QuestionRole::FollowUp);
        assert_eq!(
            guess_role("describe your morning routine in detail"),
            QuestionRole::Primary
        );
        assert_eq!(guess_role("what about your childhood pets"), QuestionRole::Primary);
    }

    #[test]
    fn tsv_reader_parses_interview_format() {
        let content = "start_time\tstop_time\tspeaker\tvalue\n\
                       0.5\t2.0\tEllie\thow are you doing today\n\
                       2.5\t4.0\tParticipant\tdoing alright\n";
        let turns = parse_transcript_tsv(content, "<test>").unwrap();
        assert_eq!(turns.len(), 2);
        assert_eq!(turns[0].speaker, Speaker::Interviewer);
        assert_eq!(turns[1].speaker, Speaker::Participant);
        assert_eq!(turns[0].start, 0.5);
    }

    #[test]
    fn tsv_reader_rejects_unknown_speaker() {
        let content = "0.5\t2.0\tNarrator\thello\n";
        assert!(parse_transcript_tsv(content, "<test>").is_err());
    }

    #[test]
    fn jsonl_reader_round_trips() {
        let content = r#"{"speaker":"interviewer","start":0.0,"end":1.0,"text":"do you feel down"}
{"speaker":"participant","start":1.5,"end":3.0,"text":"now and then"}"#;
        let turns = parse_transcript_jsonl(content, "<test>").unwrap();
        assert_eq!(turns.len(), 2);
        assert_eq!(turns[0].speaker, Speaker::Interviewer);
    }

    // ==== Brute-force segmentation oracle ====
    //
    // An independent index-based reimplementation: find matched
    // interviewer turn positions with explicit nested loops, then gather
    // the participant turns strictly between consecutive matches.

    struct OracleSegment {
        matched_index: usize,
        answer_positions: Vec<usize>,
    }

    fn oracle_segment(turns: &[TranscriptTurn], tax: &QuestionTaxonomy) -> Vec<OracleSegment> {
        let mut question_positions: Vec<(usize, usize)> = Vec::new();
        for i in 0..turns.len() {
            if turns[i].speaker == Speaker::Interviewer {
                if let Some(e) = tax.by_text(&turns[i].text) {
                    question_positions.push((i, e.index));
                }
            }
        }
        let mut out = Vec::new();
        for qi in 0..question_positions.len() {
            let (pos, idx) = question_positions[qi];
            let next_pos = if qi + 1 < question_positions.len() {
                question_positions[qi + 1].0
            } else {
                turns.len()
            };
            let mut answers = Vec::new();
            for j in (pos + 1)..next_pos {
                if turns[j].speaker == Speaker::Participant {
                    answers.push(j);
                }
            }
            out.push(OracleSegment {
                matched_index: idx,
                answer_positions: answers,
            });
        }
        out
    }

    #[test]
    fn segmentation_agrees_with_brute_force_oracle_on_micro_transcripts() {
        let tax = QuestionTaxonomy::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let question_pool = [
            "where are you from originally",
            "what do you do now",
            "how hard is that",
            "do you feel down",
            "why",
        ];
        let noise_pool = ["okay", "mhm", "that is interesting to hear"];
        let answer_pool = ["yeah", "i suppose so", "not really", "it was a long time ago"];

        let mut compared = 0;
        for case in 0..50 {
            let n_turns = rng.gen_range(1..=6);
            let mut turns = Vec::new();
            let mut t = 0.0;
            for _ in 0..n_turns {
                let is_interviewer = rng.gen_bool(0.5);
                let text = if is_interviewer {
                    if rng.gen_bool(0.7) {
                        question_pool[rng.gen_range(0..question_pool.len())]
                    } else {
                        noise_pool[rng.gen_range(0..noise_pool.len())]
                    }
                } else {
                    answer_pool[rng.gen_range(0..answer_pool.len())]
                };
                turns.push(TranscriptTurn {
                    speaker: if is_interviewer {
                        Speaker::Interviewer
                    } else {
                        Speaker::Participant
                    },
                    start: t,
                    end: t + 0.8,
                    text: text.to_string(),
                });
                t += 1.0;
            }

            let expected = oracle_segment(&turns, &tax);
            let mut tax_mut = tax.clone();
            let result = segment_transcript(&turns, &mut tax_mut, &MatchStrategy::Exact);
            if expected.is_empty() {
                assert!(result.is_err(), "case {case}: oracle empty but segmentation succeeded");
                continue;
            }
            let (segments, _) = result.unwrap_or_else(|e| panic!("case {case}: {e}"));
            assert_eq!(segments.len(), expected.len(), "case {case}");
            for (seg, exp) in segments.iter().zip(&expected) {
                assert_eq!(seg.matched_index, exp.matched_index, "case {case}");
                assert_eq!(seg.answer_turns.len(), exp.answer_positions.len(), "case {case}");
                for (turn, &pos) in seg.answer_turns.iter().zip(&exp.answer_positions) {
                    assert_eq!(turn.start, turns[pos].start, "case {case}");
                    assert_eq!(turn.text, turns[pos].text, "case {case}");
                }
            }
            compared += 1;
        }
        assert!(compared >= 20, "too few comparable cases: {compared}");
    }
}
