use std::collections::{BTreeMap, HashMap};

use crate::ingest::ContentHash;
use crate::vsm::{DocId, TermId};

/// Sparse row of A: `(term, count)` sorted by term id, counts ≥ 1.
pub type Row = Vec<(TermId, u32)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocEntry {
    pub path: String,
    /// Distinct terms in the document; equals the row length.
    pub total_terms: usize,
    pub content_hash: ContentHash,
}

/// The term-document count matrix with its document-frequency vector and
/// document table. M is the number of live rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseTermDocMatrix {
    pub(crate) rows: BTreeMap<DocId, Row>,
    pub(crate) df: Vec<u32>,
    pub(crate) doc_table: BTreeMap<DocId, DocEntry>,
    pub(crate) path_index: HashMap<String, DocId>,
    pub(crate) next_doc: u32,
}

impl SparseTermDocMatrix {
    pub fn m(&self) -> usize {
        self.doc_table.len()
    }

    pub fn row(&self, doc: DocId) -> Option<&Row> {
        self.rows.get(&doc)
    }

    pub fn count(&self, doc: DocId, term: TermId) -> u32 {
        self.rows
            .get(&doc)
            .and_then(|r| r.binary_search_by_key(&term, |&(t, _)| t).ok().map(|i| r[i].1))
            .unwrap_or(0)
    }

    pub fn df(&self, term: TermId) -> u32 {
        self.df.get(term.index()).copied().unwrap_or(0)
    }

    pub fn df_array(&self) -> &[u32] {
        &self.df
    }

    pub fn doc(&self, doc: DocId) -> Option<&DocEntry> {
        self.doc_table.get(&doc)
    }

    pub fn doc_id(&self, path: &str) -> Option<DocId> {
        self.path_index.get(path).copied()
    }

    pub fn docs(&self) -> impl Iterator<Item = (DocId, &DocEntry)> {
        self.doc_table.iter().map(|(&id, e)| (id, e))
    }

    pub fn rows(&self) -> impl Iterator<Item = (DocId, &Row)> {
        self.rows.iter().map(|(&id, r)| (id, r))
    }

    pub fn next_doc_id(&self) -> DocId {
        DocId(self.next_doc)
    }

    /// df recounted from the rows, sized like the stored array.
    pub fn recount_df(&self) -> Vec<u32> {
        let mut df = vec![0u32; self.df.len()];
        for row in self.rows.values() {
            for &(t, _) in row {
                if let Some(slot) = df.get_mut(t.index()) {
                    *slot += 1;
                }
            }
        }
        df
    }

    pub(crate) fn insert(&mut self, id: DocId, entry: DocEntry, row: Row) {
        self.path_index.insert(entry.path.clone(), id);
        self.doc_table.insert(id, entry);
        self.rows.insert(id, row);
        self.next_doc = self.next_doc.max(id.0 + 1);
    }

    pub(crate) fn remove(&mut self, id: DocId) -> Option<(DocEntry, Row)> {
        let entry = self.doc_table.remove(&id)?;
        self.path_index.remove(&entry.path);
        let row = self.rows.remove(&id).unwrap_or_default();
        Some((entry, row))
    }
}
