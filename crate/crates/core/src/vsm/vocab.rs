use std::collections::{BTreeSet, HashMap};

use crate::vsm::TermId;

/// Bidirectional term ↔ id map. Ids of deleted terms are tombstoned and
/// handed out again, smallest first, to new terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    term_to_id: HashMap<String, TermId>,
    id_to_term: Vec<Option<String>>,
    free_ids: BTreeSet<u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, term: &str) -> Option<TermId> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> Option<&str> {
        self.id_to_term.get(id.index())?.as_deref()
    }

    /// Returns the id for `term`, assigning one if needed. The flag is true
    /// when the term was not in the vocabulary.
    pub fn intern(&mut self, term: &str) -> (TermId, bool) {
        if let Some(id) = self.get(term) {
            return (id, false);
        }
        let id = match self.free_ids.pop_first() {
            Some(raw) => {
                self.id_to_term[raw as usize] = Some(term.to_string());
                TermId(raw)
            }
            None => {
                self.id_to_term.push(Some(term.to_string()));
                TermId((self.id_to_term.len() - 1) as u32)
            }
        };
        self.term_to_id.insert(term.to_string(), id);
        (id, true)
    }

    /// Retires a live id. Returns false if it was not live.
    pub fn tombstone(&mut self, id: TermId) -> bool {
        match self.id_to_term.get_mut(id.index()).and_then(Option::take) {
            Some(term) => {
                self.term_to_id.remove(&term);
                self.free_ids.insert(id.0);
                true
            }
            None => false,
        }
    }

    /// Number of live terms.
    pub fn len(&self) -> usize {
        self.term_to_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_to_id.is_empty()
    }

    /// One past the largest id ever assigned; the width of dense per-term
    /// arrays.
    pub fn id_capacity(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_live(&self, id: TermId) -> bool {
        self.term(id).is_some()
    }

    pub fn free_ids(&self) -> impl Iterator<Item = TermId> + '_ {
        self.free_ids.iter().map(|&i| TermId(i))
    }

    /// Live (id, term) pairs in id order.
    pub fn iter(&self) -> impl Iterator<Item = (TermId, &str)> {
        self.id_to_term
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_deref().map(|t| (TermId(i as u32), t)))
    }

    /// Rebuilds a vocabulary from its id table. Free ids are the empty slots.
    pub fn from_table(table: Vec<Option<String>>) -> Result<Self, String> {
        let mut term_to_id = HashMap::with_capacity(table.len());
        let mut free_ids = BTreeSet::new();
        for (i, slot) in table.iter().enumerate() {
            match slot {
                Some(term) => {
                    if term_to_id.insert(term.clone(), TermId(i as u32)).is_some() {
                        return Err(format!("term {term:?} has two ids"));
                    }
                }
                None => {
                    free_ids.insert(i as u32);
                }
            }
        }
        Ok(Vocabulary {
            term_to_id,
            id_to_term: table,
            free_ids,
        })
    }

    pub fn table(&self) -> &[Option<String>] {
        &self.id_to_term
    }

    /// Checks that the two maps are inverse on live ids and that no live id
    /// is free.
    pub fn check(&self) -> Result<(), String> {
        for (term, &id) in &self.term_to_id {
            if self.term(id) != Some(term.as_str()) {
                return Err(format!("term {term:?} maps to {id:?} but not back"));
            }
            if self.free_ids.contains(&id.0) {
                return Err(format!("live id {id:?} is in the free list"));
            }
        }
        let live = self.id_to_term.iter().filter(|t| t.is_some()).count();
        if live != self.term_to_id.len() {
            return Err("id table and term map disagree on size".into());
        }
        if live + self.free_ids.len() != self.id_to_term.len() {
            return Err("free list does not cover every empty slot".into());
        }
        Ok(())
    }
}
