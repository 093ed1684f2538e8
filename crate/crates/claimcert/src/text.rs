//! Text normalization shared by overlap auditing and relation scoring.
//!
//! The rules are deliberately minimal and deterministic: lowercase,
//! whitespace collapse, scheme/trailing-slash stripping for URLs, and
//! alphanumeric tokenization with a stopword filter.

use std::collections::BTreeSet;

/// Lowercase and collapse all internal whitespace to single spaces.
pub fn normalize_text(s: &str) -> String {
    s.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Normalization key for source URLs: lowercase, strip the scheme
/// (`scheme://`) and any trailing slash.
pub fn normalize_url(s: &str) -> String {
    let lower = s.trim().to_lowercase();
    let without_scheme = match lower.find("://") {
        Some(pos) => &lower[pos + 3..],
        None => lower.as_str(),
    };
    without_scheme.trim_end_matches('/').to_string()
}

/// Lowercased alphanumeric tokens with stopwords removed, as a set.
pub fn token_set(s: &str, stopwords: &BTreeSet<String>) -> BTreeSet<String> {
    tokenize(s)
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Split on non-alphanumeric boundaries, lowercasing as we go.
pub fn tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Parse a one-word-per-line stopword file. `#` starts a comment.
pub fn parse_stopwords(contents: &str) -> BTreeSet<String> {
    contents
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}
