//! Tokenization shared by ingest, querying and ROUGE.

use std::collections::HashSet;
use std::sync::OnceLock;

static STOPWORDS_RAW: &str = include_str!("../data/stopwords.txt");

fn stopword_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_RAW
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// Whether a lowercased token is on the shipped stopword list.
pub fn is_stopword(token: &str) -> bool {
    stopword_set().contains(token)
}

/// Splits on whitespace and punctuation, lowercases, keeps non-ASCII letters.
///
/// A token is a maximal run of alphanumeric characters; everything else separates.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}
