//! Drives the library with oracle-generated change sequences and compares
//! every step against the reference and against a fresh rebuild.

#![allow(dead_code)]

use std::collections::BTreeMap;

use bugloc::ranker::{length_weight, relevance, sort_ranked, RankedFile};
use bugloc::vsm::{cosine, ChangeSet, DocContent, VsmIndex};
use bugloc::TermCounts;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::{self, Corpus, Counts, Coverage, PlainChange};

pub const WEIGHT_TOL: f64 = 1e-9;

fn to_counts(c: &Counts) -> TermCounts {
    TermCounts::from_pairs(c.iter().map(|(t, &n)| (t.clone(), n)))
}

pub fn to_change_set(change: &PlainChange) -> ChangeSet {
    ChangeSet {
        added: change.added.iter().map(|(p, c)| DocContent::new(p.clone(), to_counts(c))).collect(),
        deleted: change.deleted.clone(),
        modified: change.modified.iter().map(|(p, c)| DocContent::new(p.clone(), to_counts(c))).collect(),
    }
}

/// Paths by length-weighted cosine to `query`, with the library's ordering.
pub fn ranking(index: &VsmIndex, query: &Counts, alpha: f64) -> Vec<String> {
    let Some((lo, hi)) = index.length_range() else {
        return Vec::new();
    };
    let q = index.vectorize_query(&to_counts(query));
    let mut files: Vec<RankedFile> = index
        .matrix()
        .docs()
        .map(|(id, e)| {
            let vsm = cosine(&q, &index.doc_vector(id).unwrap());
            let g = length_weight(e.total_terms, lo, hi).unwrap();
            RankedFile {
                path: e.path.clone(),
                relevance: relevance(vsm, 0.0, g, alpha),
                vsm_component: vsm,
                simi_component: 0.0,
            }
        })
        .collect();
    sort_ranked(&mut files);
    files.into_iter().map(|f| f.path).collect()
}

/// Compares `index` with the reference model of `corpus`: counts, df and M
/// exactly, idf and weights within [`WEIGHT_TOL`].
pub fn compare_with_reference(index: &VsmIndex, corpus: &Corpus) -> Result<(), String> {
    let r = oracle::reference(corpus);
    let c = index.canonical();
    if c.m != r.m {
        return Err(format!("M {} != {}", c.m, r.m));
    }
    if c.df != r.df {
        return Err(format!("df differs: {:?} vs {:?}", c.df, r.df));
    }
    let counts: BTreeMap<String, Counts> = c
        .docs
        .iter()
        .map(|(p, (_, _, tc))| (p.clone(), tc.iter().map(|(t, n)| (t.to_string(), n)).collect()))
        .collect();
    if &counts != corpus {
        return Err("stored counts differ from corpus".into());
    }
    for (t, v) in &r.idf {
        if (c.idf[t] - v).abs() > WEIGHT_TOL {
            return Err(format!("idf({t}) {} vs {v}", c.idf[t]));
        }
    }
    for (path, row) in &r.weights {
        let got = &c.weights[path];
        for term in row.keys().chain(got.keys()) {
            let a = got.get(term).copied().unwrap_or(0.0);
            let b = row.get(term).copied().unwrap_or(0.0);
            if (a - b).abs() > WEIGHT_TOL {
                return Err(format!("weight({path},{term}) {a} vs {b}"));
            }
        }
    }
    Ok(())
}

/// Runs one random change sequence from a random start. Returns which
/// change kinds it exercised.
pub fn run_sequence(seed: u64, steps: usize) -> Result<Coverage, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = rng.random_range(5..=200);
    let max_docs = 50;
    let start_docs = rng.random_range(1..=20);
    let (mut corpus, mut next_path) = oracle::random_corpus(&mut rng, start_docs, terms);
    let mut index = VsmIndex::rebuild_full(
        corpus.iter().map(|(p, c)| DocContent::new(p.clone(), to_counts(c))),
    );
    compare_with_reference(&index, &corpus)?;
    let queries: Vec<Counts> = (0..3).map(|_| oracle::random_counts(&mut rng, terms, 6)).collect();

    let mut coverage = Coverage::default();
    for step in 0..steps {
        let change = oracle::random_change(&mut rng, &corpus, terms, max_docs, &mut next_path);
        index
            .apply_change_set(to_change_set(&change))
            .map_err(|e| format!("step {step}: {e}"))?;
        coverage.merge(oracle::apply(&mut corpus, &change));

        index.check_invariants().map_err(|e| format!("step {step}: {e}"))?;
        compare_with_reference(&index, &corpus).map_err(|e| format!("step {step}: {e}"))?;
        let rebuilt = index.rebuilt();
        index
            .canonical()
            .diff(&rebuilt.canonical(), WEIGHT_TOL)
            .map_err(|e| format!("step {step} vs rebuild: {e}"))?;
        for q in &queries {
            for alpha in [0.0, 0.3] {
                if ranking(&index, q, alpha) != ranking(&rebuilt, q, alpha) {
                    return Err(format!("step {step}: ranking differs from rebuild"));
                }
            }
        }
    }
    Ok(coverage)
}
