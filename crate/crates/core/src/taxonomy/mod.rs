//! Canonical interview-question list.
//!
//! The base list holds 85 questions: 66 primary topic questions followed
//! by 19 generic follow-up prompts (indices 67–85). Every downstream
//! stage keys its 85-slot layout to these indices. Additional questions
//! discovered at mapping time are appended as extension entries with
//! indices above 85; they never displace base entries.
//!
//! Taxonomy files are tab-separated with four columns:
//! `index<TAB>role<TAB>topic_code<TAB>text`. The built-in list is an
//! embedded copy of that format.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::{normalize_question, tokenize};

/// Number of entries in the base question list.
pub const BASE_QUESTION_COUNT: usize = 85;
/// Leading entries of the base list that are primary topic questions.
pub const PRIMARY_QUESTION_COUNT: usize = 66;

const BUILTIN_TSV: &str = include_str!("builtin_questions.tsv");
/// Placeholder topic code carried by generic follow-up prompts; the real
/// topic is inherited from the preceding primary question at structuring
/// time.
pub const FOLLOW_UP_TOPIC_PLACEHOLDER: &str = "follow_up";

/// Whether a question opens a topic or probes the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionRole {
    Primary,
    FollowUp,
}

impl fmt::Display for QuestionRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuestionRole::Primary => write!(f, "primary"),
            QuestionRole::FollowUp => write!(f, "follow_up"),
        }
    }
}

impl QuestionRole {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "primary" => Some(QuestionRole::Primary),
            "follow_up" => Some(QuestionRole::FollowUp),
            _ => None,
        }
    }
}

/// One canonical question.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuestionEntry {
    /// 1-based index; base entries occupy 1..=85.
    pub index: usize,
    pub role: QuestionRole,
    /// Short topic identifier, unique among primary entries.
    pub topic_code: String,
    /// Question text as stored (lowercase).
    pub text: String,
}

impl QuestionEntry {
    pub fn is_extension(&self) -> bool {
        self.index > BASE_QUESTION_COUNT
    }
}

/// The ordered question list plus a normalized-text lookup index.
#[derive(Debug, Clone)]
pub struct QuestionTaxonomy {
    entries: Vec<QuestionEntry>,
    by_normalized: HashMap<String, usize>,
}

impl QuestionTaxonomy {
    /// The embedded base list. Panics only if the embedded data is
    /// corrupt, which the test suite rules out.
    pub fn builtin() -> Self {
        parse_taxonomy_str(BUILTIN_TSV, "<builtin>").expect("embedded question list is valid")
    }

    /// Load a taxonomy file; `None` falls back to the built-in list.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::builtin()),
            Some(p) => {
                let content = std::fs::read_to_string(p)
                    .map_err(|e| Error::io(p.display().to_string(), e))?;
                parse_taxonomy_str(&content, &p.display().to_string())
            }
        }
    }

    /// All entries ordered by index.
    pub fn entries(&self) -> &[QuestionEntry] {
        &self.entries
    }

    /// Base entries only (indices 1..=85).
    pub fn base_entries(&self) -> &[QuestionEntry] {
        &self.entries[..BASE_QUESTION_COUNT.min(self.entries.len())]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry with the given 1-based index.
    pub fn by_index(&self, index: usize) -> Option<&QuestionEntry> {
        if index == 0 || index > self.entries.len() {
            return None;
        }
        Some(&self.entries[index - 1])
    }

    /// Entry whose normalized text equals the normalized input.
    pub fn by_text(&self, text: &str) -> Option<&QuestionEntry> {
        let key = normalize_question(text);
        self.by_normalized
            .get(&key)
            .map(|&idx| &self.entries[idx - 1])
    }

    /// Append an extension entry (index > 85). Rejects text that
    /// normalizes to an existing entry or to the empty string.
    pub fn append_extension(&mut self, text: &str, role: QuestionRole) -> Result<&QuestionEntry> {
        let normalized = normalize_question(text);
        if normalized.is_empty() {
            return Err(Error::validation("cannot append empty question text"));
        }
        if let Some(&existing) = self.by_normalized.get(&normalized) {
            return Err(Error::Validation {
                message: format!(
                    "question text duplicates entry ({existing}): \"{normalized}\""
                ),
            });
        }
        let index = self.entries.len() + 1;
        let topic_code = match role {
            QuestionRole::Primary => self.extension_topic_code(&normalized, index),
            QuestionRole::FollowUp => FOLLOW_UP_TOPIC_PLACEHOLDER.to_string(),
        };
        self.entries.push(QuestionEntry {
            index,
            role,
            topic_code,
            text: normalized.clone(),
        });
        self.by_normalized.insert(normalized, index);
        Ok(&self.entries[index - 1])
    }

    /// Derive a short, unique topic code from the leading content words.
    fn extension_topic_code(&self, normalized: &str, index: usize) -> String {
        let content: Vec<String> = tokenize(normalized)
            .into_iter()
            .filter(|t| !is_function_word(t))
            .take(3)
            .map(|t| t.replace('\'', ""))
            .collect();
        let mut code = if content.is_empty() {
            format!("question_{index}")
        } else {
            content.join("_")
        };
        let taken: Vec<&str> = self
            .entries
            .iter()
            .filter(|e| e.role == QuestionRole::Primary)
            .map(|e| e.topic_code.as_str())
            .collect();
        if taken.contains(&code.as_str()) {
            code = format!("{code}_{index}");
        }
        code
    }

    /// Serialize to the tab-separated file format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.index, e.role, e.topic_code, e.text
            ));
        }
        out
    }

    /// Write the taxonomy (base plus extensions) to a file.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Words that carry no topical content; used when deriving extension
/// topic codes and when guessing the role of an unseen question.
pub(crate) fn is_function_word(token: &str) -> bool {
    const FUNCTION_WORDS: &[&str] = &[
        "a", "about", "an", "and", "are", "at", "be", "been", "before", "can", "could", "did",
        "do", "does", "don't", "ever", "for", "from", "get", "go", "had", "has", "have", "how",
        "i", "in", "is", "it", "like", "me", "more", "of", "on", "or", "out", "so", "some", "still",
        "tell", "that", "the", "them", "then", "there", "they", "this", "to", "up", "was", "way",
        "we", "were", "what", "what's", "when", "where", "which", "who", "who's", "why", "will",
        "with", "would", "you", "your", "you're", "you've",
    ];
    FUNCTION_WORDS.binary_search(&token).is_ok()
}

fn parse_taxonomy_str(content: &str, origin: &str) -> Result<QuestionTaxonomy> {
    let mut entries = Vec::new();
    let mut by_normalized = HashMap::new();
    for (lineno, line) in content.lines().enumerate() {
        let line_display = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: line_display,
                message: format!("expected 4 tab-separated fields, got {}", fields.len()),
            });
        }
        let index: usize = fields[0].trim().parse().map_err(|_| Error::Parse {
            path: origin.to_string(),
            line: line_display,
            message: format!("invalid index `{}`", fields[0]),
        })?;
        let role = QuestionRole::parse(fields[1].trim()).ok_or_else(|| Error::Parse {
            path: origin.to_string(),
            line: line_display,
            message: format!("invalid role `{}` (expected primary|follow_up)", fields[1]),
        })?;
        let topic_code = fields[2].trim().to_string();
        let text = normalize_question(fields[3]);
        if topic_code.is_empty() {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: line_display,
                message: "empty topic code".to_string(),
            });
        }
        if text.is_empty() {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: line_display,
                message: "empty question text".to_string(),
            });
        }
        if index != entries.len() + 1 {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: line_display,
                message: format!("index {index} out of order, expected {}", entries.len() + 1),
            });
        }
        if let Some(&existing) = by_normalized.get(&text) {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: line_display,
                message: format!("question text collides with entry ({existing})"),
            });
        }
        by_normalized.insert(text.clone(), index);
        // Stored text keeps the original (already lowercase) characters;
        // the normalized form doubles as storage because normalization is
        // idempotent on stored entries apart from apostrophe folding.
        entries.push(QuestionEntry {
            index,
            role,
            topic_code,
            text: fields[3].trim().to_string(),
        });
    }
    validate_taxonomy(&entries, origin)?;
    Ok(QuestionTaxonomy {
        entries,
        by_normalized,
    })
}

fn validate_taxonomy(entries: &[QuestionEntry], origin: &str) -> Result<()> {
    if entries.len() < BASE_QUESTION_COUNT {
        return Err(Error::Validation {
            message: format!(
                "{origin}: taxonomy must contain the {BASE_QUESTION_COUNT} base questions, got {}",
                entries.len()
            ),
        });
    }
    let mut primary_codes: HashMap<&str, usize> = HashMap::new();
    for e in entries {
        let expected_role = if e.index <= PRIMARY_QUESTION_COUNT {
            QuestionRole::Primary
        } else if e.index <= BASE_QUESTION_COUNT {
            QuestionRole::FollowUp
        } else {
            e.role
        };
        if e.index <= BASE_QUESTION_COUNT && e.role != expected_role {
            return Err(Error::Validation {
                message: format!(
                    "{origin}: base entry ({}) must have role {expected_role}",
                    e.index
                ),
            });
        }
        if e.role == QuestionRole::Primary {
            if let Some(prev) = primary_codes.insert(e.topic_code.as_str(), e.index) {
                return Err(Error::Validation {
                    message: format!(
                        "{origin}: topic code `{}` reused by entries ({prev}) and ({})",
                        e.topic_code, e.index
                    ),
                });
            }
        }
    }
    Ok(())
}
