//! Source files and bug reports to normalized term counts.
//!
//! The pipeline is the same for code and reports: lexical token extraction,
//! identifier splitting, lowercasing, stopword and keyword removal, and
//! Porter stemming.

pub mod porter;
pub mod stoplist;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::BugReport;

/// Occurrence counts of stemmed, lowercase, non-stopword terms in one
/// document. Counts are always ≥ 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCounts {
    counts: BTreeMap<String, u32>,
}

impl TermCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds counts from raw pairs, dropping zero counts and merging
    /// duplicates. Terms are taken verbatim; no normalization is applied.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let mut tc = Self::new();
        for (term, n) in pairs {
            tc.add(term.into(), n);
        }
        tc
    }

    pub fn add(&mut self, term: String, n: u32) {
        if n > 0 {
            *self.counts.entry(term).or_insert(0) += n;
        }
    }

    pub fn get(&self, term: &str) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    /// Number of distinct terms. This is the document length used by the
    /// length weight.
    pub fn total_terms(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(t, &n)| (t.as_str(), n))
    }

    pub fn as_map(&self) -> &BTreeMap<String, u32> {
        &self.counts
    }
}

/// Source language guessed from a file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Language {
    Java,
    Python,
    C,
    Cpp,
    Unknown,
}

impl Language {
    /// Returns `None` for extensions that are not indexed.
    pub fn from_path(path: &Path) -> Option<Language> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "java" => Some(Language::Java),
            "py" => Some(Language::Python),
            "c" | "h" => Some(Language::C),
            "cc" | "cpp" | "hpp" => Some(Language::Cpp),
            _ => None,
        }
    }
}

/// True for the extensions that make up the code corpus.
pub fn is_source_path(path: &Path) -> bool {
    Language::from_path(path).is_some()
}

/// Extracts identifier-like tokens: maximal runs of letters, digits and
/// underscores that start with a letter or underscore.
///
/// Comments and string literals are not stripped, so their words become
/// tokens too. Runs starting with a digit (numeric literals) are skipped.
/// The rule is the same for every language; the hint is accepted so callers
/// need not special-case unknown files.
pub fn tokenize_source(text: &str, _language: Language) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if let Some(first) = current.chars().next() {
            if first == '_' || first.is_alphabetic() {
                tokens.push(std::mem::take(current));
            } else {
                current.clear();
            }
        }
    };
    for ch in text.chars() {
        if ch == '_' || ch.is_alphanumeric() {
            current.push(ch);
        } else {
            flush(&mut current, &mut tokens);
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Upper,
    Lower,
    Digit,
    Sep,
}

fn classify(ch: char) -> CharClass {
    if ch == '_' || !ch.is_alphanumeric() {
        CharClass::Sep
    } else if ch.is_numeric() {
        CharClass::Digit
    } else if ch.is_uppercase() {
        CharClass::Upper
    } else {
        CharClass::Lower
    }
}

/// Splits an identifier on underscores, letter/digit boundaries and camelCase
/// humps. `HTTPServer` splits as `HTTP` + `Server`.
///
/// Parts are lowercased and pure-digit parts dropped. When two or more parts
/// remain, the whole lowercased token is appended as well.
pub fn split_identifier(token: &str) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let mut parts: Vec<String> = Vec::new();
    let mut start: Option<usize> = None;

    for i in 0..chars.len() {
        let class = classify(chars[i]);
        if class == CharClass::Sep {
            if let Some(s) = start.take() {
                parts.push(chars[s..i].iter().collect());
            }
            continue;
        }
        let Some(s) = start else {
            start = Some(i);
            continue;
        };
        let prev = classify(chars[i - 1]);
        let boundary = match (prev, class) {
            (CharClass::Digit, CharClass::Digit) => false,
            (CharClass::Digit, _) | (_, CharClass::Digit) => true,
            (CharClass::Lower, CharClass::Upper) => true,
            // End of an acronym run: the last capital starts the next word.
            (CharClass::Upper, CharClass::Upper) => chars
                .get(i + 1)
                .is_some_and(|&next| classify(next) == CharClass::Lower),
            _ => false,
        };
        if boundary {
            parts.push(chars[s..i].iter().collect());
            start = Some(i);
        }
    }
    if let Some(s) = start {
        parts.push(chars[s..].iter().collect());
    }

    let mut out: Vec<String> = parts
        .into_iter()
        .filter(|p| !p.chars().all(|c| c.is_numeric()))
        .map(|p| p.to_lowercase())
        .collect();
    if out.len() >= 2 {
        out.push(token.to_lowercase());
    }
    out
}

fn keep_term(term: &str) -> bool {
    term.chars().count() > 1
        && !term.chars().all(|c| c.is_numeric())
        && !stoplist::is_stopword(term)
}

/// Lowercases, removes stopwords, keywords and single-character tokens,
/// stems, and counts.
pub fn normalize_terms<I, S>(tokens: I) -> TermCounts
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = TermCounts::new();
    for token in tokens {
        let lower = token.as_ref().to_lowercase();
        if !keep_term(&lower) {
            continue;
        }
        let stemmed = porter::stem(&lower);
        // A stem can collapse to a stopword or a single letter.
        if keep_term(&stemmed) {
            counts.add(stemmed, 1);
        }
    }
    counts
}

fn text_to_terms(text: &str, language: Language) -> TermCounts {
    let tokens = tokenize_source(text, language);
    normalize_terms(tokens.iter().flat_map(|t| split_identifier(t)))
}

/// Preprocesses one source file.
///
/// Returns [`Error::UnsupportedFile`] for extensions outside the code
/// corpus; callers skip such files.
pub fn build_code_document(path: &Path, text: &str) -> Result<TermCounts> {
    let language = Language::from_path(path)
        .ok_or_else(|| Error::UnsupportedFile(path.display().to_string()))?;
    Ok(text_to_terms(text, language))
}

/// Preprocesses a bug report: title and description joined by a space.
pub fn build_report_document(report: &BugReport) -> Result<TermCounts> {
    if report.title.is_empty() && report.description.is_empty() {
        return Err(Error::EmptyDocument(report.id.clone()));
    }
    let text = format!("{} {}", report.title, report.description);
    Ok(text_to_terms(&text, Language::Unknown))
}
