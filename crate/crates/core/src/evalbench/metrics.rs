use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// A ranking paired with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgedCase {
    pub ranking: Vec<String>,
    pub relevant: BTreeSet<String>,
}

/// Mean of precision@rank over relevant items, divided by `|relevant|`.
/// Relevant items absent from `ranked` contribute 0.
pub fn average_precision<S: AsRef<str>>(ranked: &[S], relevant: &BTreeSet<String>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::Unjudgeable);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, path) in ranked.iter().enumerate() {
        if relevant.contains(path.as_ref()) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

pub fn mean_average_precision(cases: &[JudgedCase]) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::NoJudgeableCases);
    }
    let mut sum = 0.0;
    for case in cases {
        sum += average_precision(&case.ranking, &case.relevant)?;
    }
    Ok(sum / cases.len() as f64)
}

/// Fraction of cases with at least one relevant file among the first `n`.
pub fn top_n_accuracy(cases: &[JudgedCase], n: usize) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::NoJudgeableCases);
    }
    let mut hits = 0usize;
    for case in cases {
        if case.relevant.is_empty() {
            return Err(Error::Unjudgeable);
        }
        if case.ranking.iter().take(n).any(|p| case.relevant.contains(p)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / cases.len() as f64)
}
