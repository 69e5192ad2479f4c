//! Reference tf-idf model recomputed from scratch over plain maps, plus a
//! generator of random valid change sequences. Shares no code with the
//! library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;

pub type Counts = BTreeMap<String, u32>;
pub type Corpus = BTreeMap<String, Counts>;

#[derive(Debug, Clone, Default)]
pub struct Reference {
    pub m: usize,
    pub df: BTreeMap<String, u32>,
    pub idf: BTreeMap<String, f64>,
    pub weights: BTreeMap<String, BTreeMap<String, f64>>,
}

pub fn tf(count: u32) -> f64 {
    if count == 0 {
        0.0
    } else {
        (count as f64).ln() + 1.0
    }
}

pub fn reference(corpus: &Corpus) -> Reference {
    let m = corpus.len();
    let mut df: BTreeMap<String, u32> = BTreeMap::new();
    for counts in corpus.values() {
        for (term, &c) in counts {
            if c > 0 {
                *df.entry(term.clone()).or_default() += 1;
            }
        }
    }
    let idf: BTreeMap<String, f64> = df
        .iter()
        .map(|(t, &d)| (t.clone(), (m as f64 / (d as f64 + 1.0)).ln()))
        .collect();
    let weights = corpus
        .iter()
        .map(|(path, counts)| {
            let row = counts
                .iter()
                .filter(|(_, &c)| c > 0)
                .map(|(t, &c)| (t.clone(), tf(c) * idf[t]))
                .collect();
            (path.clone(), row)
        })
        .collect();
    Reference { m, df, idf, weights }
}

/// Query weights against a corpus's idf; unknown terms dropped.
pub fn query_weights(reference: &Reference, query: &Counts) -> BTreeMap<String, f64> {
    query
        .iter()
        .filter_map(|(t, &c)| reference.idf.get(t).map(|idf| (t.clone(), tf(c) * idf)))
        .collect()
}

pub fn cosine(u: &BTreeMap<String, f64>, v: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = u.iter().filter_map(|(t, a)| v.get(t).map(|b| a * b)).sum();
    let nu = u.values().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.values().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

/// Document changes in plain form.
#[derive(Debug, Clone, Default)]
pub struct PlainChange {
    pub added: Vec<(String, Counts)>,
    pub deleted: Vec<String>,
    pub modified: Vec<(String, Counts)>,
}

/// Which kinds of atomic change a sequence has exercised.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Coverage {
    pub doc_added: bool,
    pub doc_deleted: bool,
    pub doc_modified: bool,
    pub term_added: bool,
    pub term_deleted: bool,
    pub count_changed: bool,
    pub corpus_resized: bool,
}

impl Coverage {
    pub fn merge(&mut self, o: Coverage) {
        self.doc_added |= o.doc_added;
        self.doc_deleted |= o.doc_deleted;
        self.doc_modified |= o.doc_modified;
        self.term_added |= o.term_added;
        self.term_deleted |= o.term_deleted;
        self.count_changed |= o.count_changed;
        self.corpus_resized |= o.corpus_resized;
    }

    pub fn complete(&self) -> bool {
        self.doc_added
            && self.doc_deleted
            && self.doc_modified
            && self.term_added
            && self.term_deleted
            && self.count_changed
            && self.corpus_resized
    }
}

pub fn term_name(i: usize) -> String {
    // Distinct lowercase strings; the library never sees raw text here.
    let mut s = String::from("t");
    let mut n = i;
    loop {
        s.push((b'a' + (n % 26) as u8) as char);
        n /= 26;
        if n == 0 {
            break;
        }
    }
    s
}

pub fn random_counts<R: Rng>(rng: &mut R, terms: usize, max_len: usize) -> Counts {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| (term_name(rng.random_range(0..terms)), rng.random_range(1..=4)))
        .collect()
}

pub fn random_corpus<R: Rng>(rng: &mut R, docs: usize, terms: usize) -> (Corpus, usize) {
    let corpus = (0..docs)
        .map(|i| (format!("d{i:03}.java"), random_counts(rng, terms, 12)))
        .collect();
    (corpus, docs)
}

/// Mutates a copy of `counts`: change some counts, drop some terms, add
/// some terms. Never returns an empty map.
fn mutate<R: Rng>(rng: &mut R, counts: &Counts, terms: usize) -> Counts {
    let mut out = counts.clone();
    let keys: Vec<String> = out.keys().cloned().collect();
    for k in keys {
        match rng.random_range(0..6) {
            0 => {
                out.remove(&k);
            }
            1 => {
                *out.get_mut(&k).unwrap() = rng.random_range(1..=6);
            }
            _ => {}
        }
    }
    for _ in 0..rng.random_range(0..3) {
        out.entry(term_name(rng.random_range(0..terms)))
            .or_insert(rng.random_range(1..=3));
    }
    if out.is_empty() {
        out.insert(term_name(rng.random_range(0..terms)), 1);
    }
    out
}

/// A random valid change against `corpus`. Keeps the corpus between 1 and
/// `max_docs` documents. `next_path` numbers fresh paths.
pub fn random_change<R: Rng>(
    rng: &mut R,
    corpus: &Corpus,
    terms: usize,
    max_docs: usize,
    next_path: &mut usize,
) -> PlainChange {
    let paths: Vec<&String> = corpus.keys().collect();
    let mut change = PlainChange::default();
    let n_del = if paths.len() > 1 { rng.random_range(0..=2.min(paths.len() - 1)) } else { 0 };
    let n_mod = rng.random_range(0..=3.min(paths.len()));
    let picked: Vec<&&String> = paths.choose_multiple(rng, (n_del + n_mod).min(paths.len())).collect();
    for (i, p) in picked.into_iter().enumerate() {
        if i < n_del {
            change.deleted.push((*p).clone());
        } else {
            change.modified.push(((*p).clone(), mutate(rng, &corpus[*p], terms)));
        }
    }
    let room = max_docs.saturating_sub(corpus.len() - change.deleted.len());
    let n_add = rng.random_range(0..=2.min(room));
    for _ in 0..n_add {
        change.added.push((format!("d{:03}.java", *next_path), random_counts(rng, terms, 12)));
        *next_path += 1;
    }
    change
}

pub fn apply(corpus: &mut Corpus, change: &PlainChange) -> Coverage {
    let vocab_of = |c: &Corpus| -> BTreeSet<String> { c.values().flat_map(|m| m.keys().cloned()).collect() };
    let before = vocab_of(corpus);
    let mut cov = Coverage {
        doc_added: !change.added.is_empty(),
        doc_deleted: !change.deleted.is_empty(),
        doc_modified: !change.modified.is_empty(),
        corpus_resized: change.added.len() != change.deleted.len(),
        ..Default::default()
    };
    for p in &change.deleted {
        corpus.remove(p);
    }
    for (p, counts) in &change.modified {
        let old = &corpus[p];
        cov.count_changed |= counts.iter().any(|(t, c)| old.get(t).is_some_and(|o| o != c));
        corpus.insert(p.clone(), counts.clone());
    }
    for (p, counts) in &change.added {
        corpus.insert(p.clone(), counts.clone());
    }
    let after = vocab_of(corpus);
    cov.term_added = after.difference(&before).next().is_some();
    cov.term_deleted = before.difference(&after).next().is_some();
    cov
}
