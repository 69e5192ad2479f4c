//! Final relevance: length-weighted VSM score mixed with the history score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{BugReport, History};
use crate::preprocess::build_report_document;
use crate::vsm::{cosine, VsmIndex};

/// Scores closer than this are ordered by path. Incrementally maintained
/// and freshly rebuilt models agree to ~1e-14, so ranking on a coarser grid
/// keeps their orderings identical when scores tie mathematically.
pub const SCORE_RESOLUTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankParams {
    pub alpha: f64,
    pub top_k: usize,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            alpha: 0.25,
            top_k: 10,
        }
    }
}

impl RankParams {
    pub fn new(alpha: f64, top_k: usize) -> Result<Self> {
        let params = RankParams { alpha, top_k };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidTopK);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFile {
    pub path: String,
    pub relevance: f64,
    pub vsm_component: f64,
    pub simi_component: f64,
}

/// Files by descending relevance, ties by ascending path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<RankedFile>,
}

impl RankedList {
    pub fn paths(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.path.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }
}

/// Logistic of the min-max normalized length. A corpus where every file has
/// the same length normalizes to 0.5.
pub fn length_weight(total_terms: usize, x_min: usize, x_max: usize) -> Result<f64> {
    if total_terms < x_min || total_terms > x_max {
        return Err(Error::LengthOutOfRange {
            len: total_terms,
            min: x_min,
            max: x_max,
        });
    }
    let n = if x_max == x_min {
        0.5
    } else {
        (total_terms - x_min) as f64 / (x_max - x_min) as f64
    };
    Ok(1.0 / (1.0 + (-n).exp()))
}

pub fn relevance(vsm_score: f64, simi_score: f64, g: f64, alpha: f64) -> f64 {
    alpha * g * vsm_score + (1.0 - alpha) * simi_score
}

fn order_key(relevance: f64) -> i64 {
    (relevance / SCORE_RESOLUTION).round() as i64
}

/// Sorts by relevance (at [`SCORE_RESOLUTION`]) descending, then path.
pub fn sort_ranked(entries: &mut [RankedFile]) {
    entries.sort_by(|a, b| {
        order_key(b.relevance)
            .cmp(&order_key(a.relevance))
            .then_with(|| a.path.cmp(&b.path))
    });
}

/// Scores every live code file for `report`, without truncation.
pub fn rank_all(code: &VsmIndex, history: &History, report: &BugReport, alpha: f64) -> Result<RankedList> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let (x_min, x_max) = code.length_range().ok_or(Error::EmptyCorpus)?;
    let query = build_report_document(report)?;
    let query_vec = code.vectorize_query(&query);
    let simi = history.similarities(report)?;

    let mut entries = Vec::with_capacity(code.m());
    for (id, entry) in code.matrix().docs() {
        let vsm = cosine(&query_vec, &code.doc_vector(id)?);
        let g = length_weight(entry.total_terms, x_min, x_max)?;
        let s = simi.simi_score(&entry.path);
        entries.push(RankedFile {
            path: entry.path.clone(),
            relevance: relevance(vsm, s, g, alpha),
            vsm_component: vsm,
            simi_component: s,
        });
    }
    sort_ranked(&mut entries);
    Ok(RankedList { entries })
}

/// The `top_k` most relevant files for `report`.
pub fn rank(code: &VsmIndex, history: &History, report: &BugReport, params: RankParams) -> Result<RankedList> {
    params.validate()?;
    let mut list = rank_all(code, history, report, params.alpha)?;
    list.truncate(params.top_k);
    Ok(list)
}
