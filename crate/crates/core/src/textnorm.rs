//! Question-text normalization.
//!
//! Matching between transcript utterances and the canonical question list
//! happens on normalized text: lowercased, whitespace-collapsed, with
//! curly apostrophes folded to ASCII and terminal punctuation stripped.
//! Dataset anonymization tokens such as `l_a` and `p_t_s_d` survive
//! normalization unchanged (underscores are not punctuation).

/// Punctuation stripped from the end of an utterance. Internal
/// punctuation (apostrophes, underscores) is preserved.
const TERMINAL_PUNCTUATION: &[char] = &['?', '!', '.', ',', ';', ':'];

/// Normalize question text for lookup and similarity comparison.
pub fn normalize_question(text: &str) -> String {
    let lowered = text.to_lowercase();
    let folded: String = lowered
        .chars()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' => '\'',
            '\u{201c}' | '\u{201d}' => '"',
            c if c.is_whitespace() => ' ',
            c => c,
        })
        .collect();
    let collapsed = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_end_matches(TERMINAL_PUNCTUATION)
        .trim()
        .to_string()
}

/// Whitespace tokens of the normalized text.
pub fn tokenize(text: &str) -> Vec<String> {
    normalize_question(text)
        .split_whitespace()
        .map(|t| t.to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_strips_terminal_punctuation() {
        assert_eq!(
            normalize_question("Where are you from originally?"),
            "where are you from originally"
        );
    }

    #[test]
    fn collapses_internal_whitespace() {
        assert_eq!(
            normalize_question("  what do you \t do  now?? "),
            "what do you do now"
        );
    }

    #[test]
    fn folds_curly_apostrophes() {
        assert_eq!(normalize_question("what\u{2019}s your dream job"), "what's your dream job");
    }

    #[test]
    fn preserves_anonymization_tokens() {
        assert_eq!(
            normalize_question("Why did you move to l_a?"),
            "why did you move to l_a"
        );
        assert_eq!(
            normalize_question("have you ever been diagnosed with p_t_s_d?"),
            "have you ever been diagnosed with p_t_s_d"
        );
    }

    #[test]
    fn empty_and_punctuation_only_normalize_to_empty() {
        assert_eq!(normalize_question("   "), "");
        assert_eq!(normalize_question("?!"), "");
    }

    #[test]
    fn tokenize_splits_normalized_words() {
        assert_eq!(tokenize("How hard is THAT?"), vec!["how", "hard", "is", "that"]);
    }
}
