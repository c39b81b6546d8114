//! Small text helpers shared by the checklist, memory and tree dedup rules.

/// Dedup key: casefold and collapse runs of whitespace to one space.
pub fn normalize_key(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Casefolded alphanumeric unigrams.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}
