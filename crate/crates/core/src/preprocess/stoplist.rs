use std::collections::HashSet;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

const ENGLISH: &str = include_str!("../../data/stopwords_en.txt");
const KEYWORDS: &str = include_str!("../../data/keywords.txt");

/// Parses a stoplist file: one term per line, `#` starts a comment.
pub fn parse_list(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
}

fn combined() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        parse_list(ENGLISH)
            .chain(parse_list(KEYWORDS))
            .map(str::to_lowercase)
            .collect()
    })
}

/// True when `term` (already lowercase) is an English stopword or a
/// programming-language keyword.
pub fn is_stopword(term: &str) -> bool {
    combined().contains(term)
}

/// SHA-256 over both shipped lists. Stored in snapshots so a model built with
/// different lists is refused on load.
pub fn digest() -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"english\n");
    hasher.update(ENGLISH.as_bytes());
    hasher.update(b"keywords\n");
    hasher.update(KEYWORDS.as_bytes());
    hasher.finalize().into()
}
