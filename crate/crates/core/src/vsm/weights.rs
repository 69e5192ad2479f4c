//! Scalar tf-idf arithmetic and the sparse weighted vector type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vsm::TermId;

/// `ln(count) + 1`, with `tf(0) = 0` for absent terms.
pub fn compute_tf(count: u32) -> f64 {
    if count == 0 {
        0.0
    } else {
        f64::from(count).ln() + 1.0
    }
}

/// `ln(M / (df + 1))`. Negative when `df + 1 > M`; not clamped.
pub fn compute_idf(m: usize, df: u32) -> f64 {
    (m as f64 / (f64::from(df) + 1.0)).ln()
}

fn sign(x: u32) -> i64 {
    i64::from(x > 0)
}

/// Document-frequency update for one term when one document's count for it
/// goes from `a_old` to `a_new`: `df + sign(a_new) - sign(a_old)`.
pub fn update_df_for_doc(term: TermId, df_old: u32, a_old: u32, a_new: u32) -> Result<u32> {
    let df_new = i64::from(df_old) + sign(a_new) - sign(a_old);
    u32::try_from(df_new).map_err(|_| Error::DfUnderflow { term: term.0 })
}

/// Additive idf correction when the corpus grows from `m` to `m + delta`:
/// `ln((m + delta) / m)`.
pub fn idf_shift(m: usize, delta: i64) -> Result<f64> {
    let new_m = m as i64 + delta;
    if m == 0 || new_m < 1 {
        return Err(Error::InvalidCorpus { m, delta });
    }
    Ok((new_m as f64 / m as f64).ln())
}

/// Sparse tf-idf vector, sorted by term id, without explicit zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    entries: Vec<(TermId, f64)>,
}

impl DocVector {
    /// Builds a vector from entries in any order. Zero weights are dropped;
    /// duplicate ids keep the last weight.
    pub fn from_entries(mut entries: Vec<(TermId, f64)>) -> Self {
        entries.sort_by_key(|&(t, _)| t);
        entries.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 = later.1;
                true
            } else {
                false
            }
        });
        entries.retain(|&(_, w)| w != 0.0);
        DocVector { entries }
    }

    pub(crate) fn from_sorted(entries: Vec<(TermId, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, w)| w != 0.0 && w.is_finite()));
        DocVector { entries }
    }

    pub fn get(&self, term: TermId) -> f64 {
        self.entries
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn entries(&self) -> &[(TermId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &DocVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &DocVector, v: &DocVector) -> f64 {
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (u.dot(v) / denom).clamp(-1.0, 1.0)
}
