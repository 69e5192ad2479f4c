//! Incrementally maintained vector space model.
//!
//! [`VsmIndex`] owns the vocabulary, the term-document count matrix A, the
//! document-frequency vector, and a dense cache of idf values. A tf-idf row
//! is never stored; `D_m(w) = tf(A_m(w)) · idf(w)` is evaluated on demand,
//! so an update only has to touch the counts it changes, the df entries
//! whose sign flips, and the idf cache.
//!
//! When the corpus size M changes, every idf moves by the same amount
//! `ln((M + ΔM) / M)`. Terms whose df also changed are recomputed from
//! scratch instead.

mod matrix;
mod vocab;
mod weights;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use matrix::{DocEntry, Row, SparseTermDocMatrix};
pub use vocab::Vocabulary;
pub use weights::{
    compute_idf, compute_tf, cosine, idf_shift, update_df_for_doc, DocVector,
};

use crate::error::{Error, PathError, Result};
use crate::ingest::ContentHash;
use crate::preprocess::TermCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocId(pub u32);

/// A document's preprocessed content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocContent {
    pub path: String,
    pub counts: TermCounts,
    pub content_hash: ContentHash,
}

impl DocContent {
    pub fn new(path: impl Into<String>, counts: TermCounts) -> Self {
        DocContent {
            path: path.into(),
            counts,
            content_hash: ContentHash::default(),
        }
    }

    pub fn with_hash(mut self, hash: ContentHash) -> Self {
        self.content_hash = hash;
        self
    }
}

/// Document-level changes between two corpus states.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeSet {
    pub added: Vec<DocContent>,
    pub deleted: Vec<String>,
    pub modified: Vec<DocContent>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.deleted.is_empty() && self.modified.is_empty()
    }

    pub fn delta_m(&self) -> i64 {
        self.added.len() as i64 - self.deleted.len() as i64
    }

    pub fn len(&self) -> usize {
        self.added.len() + self.deleted.len() + self.modified.len()
    }
}

/// What an update changed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct UpdateReport {
    /// Terms whose document frequency changed; their idf was recomputed.
    pub touched_terms: Vec<TermId>,
    /// Documents added, deleted or modified.
    pub touched_docs: Vec<DocId>,
    pub delta_m: i64,
    pub new_terms: usize,
    pub tombstoned_terms: usize,
}

/// The model over one corpus: vocabulary, counts, df, and cached idf.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VsmIndex {
    vocab: Vocabulary,
    matrix: SparseTermDocMatrix,
    idf: Vec<f64>,
    /// Multiset of document lengths (distinct-term counts).
    lengths: BTreeMap<usize, usize>,
}

impl VsmIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the model from scratch. Documents are taken in path order and
    /// term ids are assigned in order of first appearance.
    pub fn rebuild_full<I>(documents: I) -> Self
    where
        I: IntoIterator<Item = DocContent>,
    {
        let mut docs: Vec<DocContent> = documents.into_iter().collect();
        docs.sort_by(|a, b| a.path.cmp(&b.path));
        docs.dedup_by(|later, earlier| later.path == earlier.path);

        let mut index = VsmIndex::new();
        for (i, doc) in docs.into_iter().enumerate() {
            let row = index.intern_row(&doc.counts);
            for &(t, _) in &row {
                index.matrix.df[t.index()] += 1;
            }
            index.insert_doc(DocId(i as u32), doc, row);
        }
        let m = index.m();
        for (t, _) in index.vocab.iter() {
            index.idf[t.index()] = compute_idf(m, index.matrix.df[t.index()]);
        }
        index
    }

    /// Convenience wrapper over [`VsmIndex::rebuild_full`] for documents
    /// without content hashes.
    pub fn rebuild_from_counts<'a, I>(documents: I) -> Self
    where
        I: IntoIterator<Item = (&'a String, &'a TermCounts)>,
    {
        Self::rebuild_full(
            documents
                .into_iter()
                .map(|(p, c)| DocContent::new(p.clone(), c.clone())),
        )
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn matrix(&self) -> &SparseTermDocMatrix {
        &self.matrix
    }

    pub fn m(&self) -> usize {
        self.matrix.m()
    }

    /// Cached idf of a live term.
    pub fn idf(&self, term: TermId) -> Option<f64> {
        self.vocab.is_live(term).then(|| self.idf[term.index()])
    }

    pub fn idf_array(&self) -> &[f64] {
        &self.idf
    }

    /// Smallest and largest document length, if any documents exist.
    pub fn length_range(&self) -> Option<(usize, usize)> {
        let min = *self.lengths.keys().next()?;
        let max = *self.lengths.keys().next_back()?;
        Some((min, max))
    }

    pub fn doc_id(&self, path: &str) -> Option<DocId> {
        self.matrix.doc_id(path)
    }

    fn intern_row(&mut self, counts: &TermCounts) -> Row {
        let mut row: Row = counts
            .iter()
            .map(|(term, n)| {
                let (id, fresh) = self.vocab.intern(term);
                if fresh {
                    if id.index() == self.matrix.df.len() {
                        self.matrix.df.push(0);
                        self.idf.push(0.0);
                    } else {
                        debug_assert_eq!(self.matrix.df[id.index()], 0);
                    }
                }
                (id, n)
            })
            .collect();
        row.sort_unstable_by_key(|&(t, _)| t);
        row
    }

    fn insert_doc(&mut self, id: DocId, doc: DocContent, row: Row) {
        *self.lengths.entry(row.len()).or_insert(0) += 1;
        let entry = DocEntry {
            path: doc.path,
            total_terms: row.len(),
            content_hash: doc.content_hash,
        };
        self.matrix.insert(id, entry, row);
    }

    fn forget_length(&mut self, len: usize) {
        if let Some(n) = self.lengths.get_mut(&len) {
            *n -= 1;
            if *n == 0 {
                self.lengths.remove(&len);
            }
        }
    }

    fn validate(&self, changes: &ChangeSet) -> Result<()> {
        let mut errors = Vec::new();
        let mut seen = BTreeSet::new();
        let all_paths = changes
            .added
            .iter()
            .map(|d| &d.path)
            .chain(&changes.deleted)
            .chain(changes.modified.iter().map(|d| &d.path));
        for path in all_paths {
            if !seen.insert(path) {
                errors.push(PathError::Duplicate(path.clone()));
            }
        }
        for doc in &changes.added {
            if self.matrix.doc_id(&doc.path).is_some() {
                errors.push(PathError::AlreadyPresent(doc.path.clone()));
            }
        }
        let existing = changes
            .deleted
            .iter()
            .chain(changes.modified.iter().map(|d| &d.path));
        for path in existing {
            if self.matrix.doc_id(path).is_none() {
                errors.push(PathError::Missing(path.clone()));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ChangeSetRejected(errors))
        }
    }

    fn bump_df(&mut self, term: TermId, a_old: u32, a_new: u32, touched: &mut BTreeSet<TermId>) -> Result<()> {
        let df = &mut self.matrix.df[term.index()];
        let new = update_df_for_doc(term, *df, a_old, a_new)?;
        if new != *df {
            *df = new;
            touched.insert(term);
        }
        Ok(())
    }

    /// Applies a change set in place.
    ///
    /// Invalid change sets (unknown paths, paths already present, paths
    /// listed twice) are rejected before anything is modified.
    pub fn apply_change_set(&mut self, changes: ChangeSet) -> Result<UpdateReport> {
        self.validate(&changes)?;
        let m_old = self.m();
        let vocab_before = self.vocab.len();
        let mut touched_terms = BTreeSet::new();
        let mut touched_docs = BTreeSet::new();
        let ChangeSet {
            mut added,
            mut deleted,
            mut modified,
        } = changes;
        added.sort_by(|a, b| a.path.cmp(&b.path));
        deleted.sort();
        modified.sort_by(|a, b| a.path.cmp(&b.path));

        for path in &deleted {
            let id = self.matrix.doc_id(path).expect("validated");
            let (entry, row) = self.matrix.remove(id).expect("validated");
            self.forget_length(entry.total_terms);
            for (t, a) in row {
                self.bump_df(t, a, 0, &mut touched_terms)?;
            }
            touched_docs.insert(id);
        }

        for doc in modified {
            let id = self.matrix.doc_id(&doc.path).expect("validated");
            let new_row = self.intern_row(&doc.counts);
            let (old_entry, old_row) = self.matrix.remove(id).expect("validated");
            self.forget_length(old_entry.total_terms);
            // Merge-walk both sorted rows; only sign changes move df.
            let (mut i, mut j) = (0, 0);
            while i < old_row.len() || j < new_row.len() {
                let (t, a_old, a_new) = match (old_row.get(i), new_row.get(j)) {
                    (Some(&(to, ao)), Some(&(tn, an))) if to == tn => {
                        i += 1;
                        j += 1;
                        (to, ao, an)
                    }
                    (Some(&(to, ao)), Some(&(tn, _))) if to < tn => {
                        i += 1;
                        (to, ao, 0)
                    }
                    (Some(&(to, ao)), None) => {
                        i += 1;
                        (to, ao, 0)
                    }
                    (_, Some(&(tn, an))) => {
                        j += 1;
                        (tn, 0, an)
                    }
                    (None, None) => unreachable!(),
                };
                self.bump_df(t, a_old, a_new, &mut touched_terms)?;
            }
            self.insert_doc(id, doc, new_row);
            touched_docs.insert(id);
        }

        for doc in added {
            let id = self.matrix.next_doc_id();
            let row = self.intern_row(&doc.counts);
            for &(t, a) in &row {
                self.bump_df(t, 0, a, &mut touched_terms)?;
            }
            self.insert_doc(id, doc, row);
            touched_docs.insert(id);
        }

        let mut tombstoned = 0;
        for &t in &touched_terms {
            if self.matrix.df[t.index()] == 0 && self.vocab.tombstone(t) {
                self.idf[t.index()] = 0.0;
                tombstoned += 1;
            }
        }

        let m_new = self.m();
        let delta_m = m_new as i64 - m_old as i64;
        if delta_m != 0 && m_old > 0 && m_new > 0 {
            let shift = idf_shift(m_old, delta_m)?;
            for (t, _) in self.vocab.iter() {
                if touched_terms.contains(&t) {
                    continue;
                }
                // idf is exactly 0 when df + 1 == M; a shifted value would
                // leave rounding residue that cosine rescales into signal.
                if self.matrix.df[t.index()] as usize + 1 == m_new {
                    self.idf[t.index()] = 0.0;
                } else {
                    self.idf[t.index()] += shift;
                }
            }
        }
        if m_new > 0 {
            for &t in &touched_terms {
                if self.vocab.is_live(t) {
                    self.idf[t.index()] = compute_idf(m_new, self.matrix.df[t.index()]);
                }
            }
        }

        let new_terms = (self.vocab.len() + tombstoned).saturating_sub(vocab_before);
        Ok(UpdateReport {
            touched_terms: touched_terms.into_iter().collect(),
            touched_docs: touched_docs.into_iter().collect(),
            delta_m,
            new_terms,
            tombstoned_terms: tombstoned,
        })
    }

    /// The tf-idf row `D_m` of a live document.
    pub fn doc_vector(&self, doc: DocId) -> Result<DocVector> {
        let row = self
            .matrix
            .row(doc)
            .ok_or_else(|| Error::DocNotFound(format!("doc #{}", doc.0)))?;
        Ok(self.weigh(row.iter().copied()))
    }

    pub fn doc_vector_by_path(&self, path: &str) -> Result<DocVector> {
        let id = self
            .doc_id(path)
            .ok_or_else(|| Error::DocNotFound(path.to_string()))?;
        self.doc_vector(id)
    }

    fn weigh(&self, entries: impl Iterator<Item = (TermId, u32)>) -> DocVector {
        DocVector::from_sorted(
            entries
                .map(|(t, n)| (t, compute_tf(n) * self.idf[t.index()]))
                .filter(|&(_, w)| w != 0.0)
                .collect(),
        )
    }

    /// Weighs a query against this corpus. Terms outside the vocabulary are
    /// dropped.
    pub fn vectorize_query(&self, query: &TermCounts) -> DocVector {
        let mut entries: Vec<(TermId, u32)> = query
            .iter()
            .filter_map(|(term, n)| self.vocab.get(term).map(|id| (id, n)))
            .collect();
        entries.sort_unstable_by_key(|&(t, _)| t);
        self.weigh(entries.into_iter())
    }

    /// Rebuilds the model from its own documents. Used as the reference when
    /// checking the incremental path.
    pub fn rebuilt(&self) -> VsmIndex {
        VsmIndex::rebuild_full(self.matrix.docs().map(|(id, entry)| {
            let counts = self.counts_of(id);
            DocContent::new(entry.path.clone(), counts).with_hash(entry.content_hash)
        }))
    }

    /// Term counts of a live document, keyed by term string.
    pub fn counts_of(&self, doc: DocId) -> TermCounts {
        TermCounts::from_pairs(self.matrix.row(doc).into_iter().flatten().map(|&(t, n)| {
            (self.vocab.term(t).expect("live term in row").to_string(), n)
        }))
    }

    /// Id-free view of the model for equality checks across differently
    /// numbered models.
    pub fn canonical(&self) -> CanonicalState {
        let mut docs = BTreeMap::new();
        let mut weights = BTreeMap::new();
        for (id, entry) in self.matrix.docs() {
            docs.insert(
                entry.path.clone(),
                (entry.total_terms, entry.content_hash, self.counts_of(id)),
            );
            let vector = self.doc_vector(id).expect("live doc");
            weights.insert(
                entry.path.clone(),
                vector
                    .entries()
                    .iter()
                    .map(|&(t, w)| (self.vocab.term(t).unwrap().to_string(), w))
                    .collect(),
            );
        }
        let mut df = BTreeMap::new();
        let mut idf = BTreeMap::new();
        for (t, term) in self.vocab.iter() {
            df.insert(term.to_string(), self.matrix.df[t.index()]);
            idf.insert(term.to_string(), self.idf[t.index()]);
        }
        CanonicalState {
            m: self.m(),
            length_range: self.length_range(),
            docs,
            df,
            idf,
            weights,
        }
    }

    /// Full consistency scan: df recount, vocabulary inverse, lengths,
    /// table sizes, stored counts ≥ 1.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        self.vocab.check()?;
        let cap = self.vocab.id_capacity();
        if self.matrix.df.len() != cap || self.idf.len() != cap {
            return Err("dense arrays do not match vocabulary capacity".into());
        }
        let recount = self.matrix.recount_df();
        for (i, (&stored, &counted)) in self.matrix.df.iter().zip(&recount).enumerate() {
            if stored != counted {
                return Err(format!("df[{i}] = {stored}, recount {counted}"));
            }
            let live = self.vocab.is_live(TermId(i as u32));
            if live != (counted > 0) {
                return Err(format!("term {i}: live = {live} but df = {counted}"));
            }
        }
        let m = self.m();
        if self.matrix.rows.len() != m || self.matrix.path_index.len() != m {
            return Err("row count, doc table and path index disagree".into());
        }
        let mut lengths = BTreeMap::new();
        for (id, row) in self.matrix.rows() {
            let entry = self.matrix.doc(id).ok_or("row without doc entry")?;
            if entry.total_terms != row.len() {
                return Err(format!("{}: total_terms {} vs row {}", entry.path, entry.total_terms, row.len()));
            }
            if row.iter().any(|&(_, n)| n == 0) {
                return Err(format!("{}: explicit zero count", entry.path));
            }
            if !row.windows(2).all(|w| w[0].0 < w[1].0) {
                return Err(format!("{}: row not sorted", entry.path));
            }
            if id.0 >= self.matrix.next_doc {
                return Err(format!("{}: id beyond next_doc", entry.path));
            }
            *lengths.entry(row.len()).or_insert(0usize) += 1;
        }
        if lengths != self.lengths {
            return Err("length multiset out of date".into());
        }
        for (t, _) in self.vocab.iter() {
            if !self.idf[t.index()].is_finite() {
                return Err(format!("idf of term {} not finite", t.0));
            }
        }
        Ok(())
    }

    /// Reassembles a model from stored parts, recomputing only the derived
    /// length multiset. Fails if the parts are inconsistent.
    pub fn from_parts(
        vocab: Vocabulary,
        df: Vec<u32>,
        idf: Vec<f64>,
        docs: Vec<(DocId, DocEntry, Row)>,
        next_doc: u32,
    ) -> std::result::Result<Self, String> {
        let mut index = VsmIndex {
            vocab,
            matrix: SparseTermDocMatrix {
                df,
                next_doc,
                ..Default::default()
            },
            idf,
            lengths: BTreeMap::new(),
        };
        for (id, entry, row) in docs {
            if index.matrix.doc_id(&entry.path).is_some() || index.matrix.doc(id).is_some() {
                return Err(format!("duplicate document {}", entry.path));
            }
            if let Some(&(t, _)) = row.iter().find(|&&(t, _)| !index.vocab.is_live(t)) {
                return Err(format!("{} references dead term {}", entry.path, t.0));
            }
            *index.lengths.entry(row.len()).or_insert(0) += 1;
            index.matrix.insert(id, entry, row);
        }
        index.matrix.next_doc = next_doc;
        index.check_invariants()?;
        Ok(index)
    }
}

/// Model contents keyed by path and term string instead of ids.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalState {
    pub m: usize,
    pub length_range: Option<(usize, usize)>,
    pub docs: BTreeMap<String, (usize, ContentHash, TermCounts)>,
    pub df: BTreeMap<String, u32>,
    pub idf: BTreeMap<String, f64>,
    pub weights: BTreeMap<String, BTreeMap<String, f64>>,
}

impl CanonicalState {
    /// Integer fields must match exactly; reals within `tol`.
    pub fn diff(&self, other: &CanonicalState, tol: f64) -> std::result::Result<(), String> {
        if self.m != other.m {
            return Err(format!("M {} vs {}", self.m, other.m));
        }
        if self.length_range != other.length_range {
            return Err(format!("length range {:?} vs {:?}", self.length_range, other.length_range));
        }
        if self.docs != other.docs {
            return Err("documents or counts differ".into());
        }
        if self.df != other.df {
            return Err("df differs".into());
        }
        let close_maps = |a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>| {
            a.len() == b.len()
                && a.iter()
                    .zip(b)
                    .all(|((ka, va), (kb, vb))| ka == kb && (va - vb).abs() <= tol)
        };
        if !close_maps(&self.idf, &other.idf) {
            return Err("idf differs beyond tolerance".into());
        }
        for (path, w) in &self.weights {
            let ow = other.weights.get(path).ok_or_else(|| format!("{path} missing"))?;
            // A weight that is exactly zero on one side is omitted; compare
            // over the union.
            for term in w.keys().chain(ow.keys()) {
                let a = w.get(term).copied().unwrap_or(0.0);
                let b = ow.get(term).copied().unwrap_or(0.0);
                if (a - b).abs() > tol {
                    return Err(format!("{path}/{term}: {a} vs {b}"));
                }
            }
        }
        Ok(())
    }
}
