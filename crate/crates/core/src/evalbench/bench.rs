//! Incremental update vs. full rebuild, timed on identical inputs.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::synth::{Churn, RepoState, Synth, SynthConfig};
use crate::error::{Error, Result};
use crate::history::{BugReport, History};
use crate::ingest::{detect_changes, materialize, ContentHash, PendingChanges};
use crate::model::{Model, ModelHandle};
use crate::ranker::{RankParams, RankedList};
use crate::vsm::VsmIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchOptions {
    /// Timed repetitions per path; the median is reported.
    pub repetitions: usize,
    /// Reader threads ranking against published snapshots during the
    /// incremental path. 0 runs single-threaded.
    pub concurrent_readers: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            repetitions: 3,
            concurrent_readers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub transition: usize,
    /// Seconds for detect, apply and rank.
    pub t_inc: f64,
    /// Seconds for preprocess-all, rebuild and rank.
    pub t_full: f64,
    pub ratio: f64,
    pub touched_docs: usize,
    pub corpus_m: usize,
    /// Live terms in the code vocabulary after the transition.
    pub vocabulary: usize,
    pub changed_files: usize,
    /// Queries answered by reader threads during timed incremental runs.
    pub reader_queries: usize,
}

fn rank_each(model: &Model, reports: &[BugReport]) -> Result<Vec<RankedList>> {
    reports.iter().map(|r| model.rank(r)).collect()
}

fn all_hashes(state: &RepoState) -> Vec<(&str, ContentHash)> {
    state
        .iter()
        .map(|(p, t)| (p.as_str(), ContentHash::of(t.as_bytes())))
        .collect()
}

/// Full path: preprocess every file, rebuild, rank.
fn full_path(state: &RepoState, history: &History, params: RankParams, reports: &[BugReport]) -> Result<(Model, Vec<RankedList>)> {
    let pending = PendingChanges {
        added: state.keys().cloned().collect(),
        ..Default::default()
    };
    let docs = materialize(&pending, state)?.added;
    let model = Model {
        code: VsmIndex::rebuild_full(docs),
        history: history.clone(),
        params,
    };
    let ranked = rank_each(&model, reports)?;
    Ok((model, ranked))
}

/// Incremental path: hash, detect, preprocess touched files, apply, rank.
fn incremental_path(base: &mut Model, state: &RepoState, reports: &[BugReport]) -> Result<(usize, usize, Vec<RankedList>)> {
    let pending = detect_changes(base.fingerprints(), all_hashes(state));
    let changed = pending.len();
    let update = base.sync_pending(pending, state)?.update;
    let ranked = rank_each(base, reports)?;
    Ok((update.touched_docs.len(), changed, ranked))
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(Duration, T)> {
    let start = Instant::now();
    let out = f()?;
    Ok((start.elapsed(), out))
}

fn same_rankings(a: &[RankedList], b: &[RankedList]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.paths() == y.paths())
}

/// Times each transition `states[i-1] → states[i]` both ways. Both paths
/// must produce identical rankings for every report.
pub fn bench_compare(
    states: &[RepoState],
    reports: &[BugReport],
    history: &History,
    params: RankParams,
    options: BenchOptions,
) -> Result<Vec<BenchReport>> {
    params.validate()?;
    assert!(states.len() >= 2, "bench_compare needs at least two repository states");
    let reps = options.repetitions.max(1);
    let (mut base, _) = full_path(&states[0], history, params, &[])?;
    let mut out = Vec::with_capacity(states.len() - 1);

    for (i, state) in states.iter().enumerate().skip(1) {
        // Warm-up, untimed.
        full_path(state, history, params, reports)?;
        incremental_path(&mut base.clone(), state, reports)?;

        let mut full_times = Vec::with_capacity(reps);
        let mut full_ranked = Vec::new();
        for _ in 0..reps {
            let (t, (_, ranked)) = timed(|| full_path(state, history, params, reports))?;
            full_times.push(t);
            full_ranked = ranked;
        }

        let mut inc_times = Vec::with_capacity(reps);
        let mut inc_result = (0, 0, Vec::new());
        let mut reader_queries = 0;
        let mut next_base = None;
        for _ in 0..reps {
            let mut working = base.clone();
            let (t, result, queries) = if options.concurrent_readers == 0 {
                let (t, r) = timed(|| incremental_path(&mut working, state, reports))?;
                (t, r, 0)
            } else {
                let (t, r, q, updated) = timed_with_readers(working, state, reports, options.concurrent_readers)?;
                working = updated;
                (t, r, q)
            };
            inc_times.push(t);
            reader_queries += queries;
            inc_result = result;
            next_base = Some(working);
        }
        let (touched_docs, changed_files, inc_ranked) = inc_result;
        if !same_rankings(&inc_ranked, &full_ranked) {
            return Err(Error::RankingMismatch { transition: i });
        }
        base = next_base.expect("at least one repetition");

        let t_inc = median(inc_times).as_secs_f64().max(f64::MIN_POSITIVE);
        let t_full = median(full_times).as_secs_f64().max(f64::MIN_POSITIVE);
        out.push(BenchReport {
            transition: i,
            t_inc,
            t_full,
            ratio: t_inc / t_full,
            touched_docs,
            corpus_m: base.code.m(),
            vocabulary: base.code.vocab().len(),
            changed_files,
            reader_queries,
        });
    }
    Ok(out)
}

/// Incremental path through a [`ModelHandle`] while `readers` threads rank
/// against whatever snapshot is current.
fn timed_with_readers(
    start: Model,
    state: &RepoState,
    reports: &[BugReport],
    readers: usize,
) -> Result<(Duration, (usize, usize, Vec<RankedList>), usize, Model)> {
    let handle = Arc::new(ModelHandle::new(start));
    let stop = AtomicBool::new(false);
    let queries = AtomicUsize::new(0);
    let probe = reports.first().cloned().unwrap_or_else(|| BugReport::new("probe", "probe", ""));
    let result = std::thread::scope(|s| {
        for _ in 0..readers {
            let (handle, stop, queries, probe) = (&handle, &stop, &queries, &probe);
            s.spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    let snap = handle.snapshot();
                    if snap.rank(probe).is_ok() {
                        queries.fetch_add(1, Ordering::Relaxed);
                    }
                }
            });
        }
        let r = timed(|| {
            let (touched, changed) = handle.update(|m| {
                let pending = detect_changes(m.fingerprints(), all_hashes(state));
                let changed = pending.len();
                let update = m.sync_pending(pending, state)?.update;
                Ok((update.touched_docs.len(), changed))
            })?;
            let ranked = rank_each(&handle.snapshot(), reports)?;
            Ok((touched, changed, ranked))
        });
        stop.store(true, Ordering::Relaxed);
        r
    })?;
    let model = Model::clone(&handle.snapshot());
    Ok((result.0, result.1, queries.load(Ordering::Relaxed), model))
}

/// Synthetic benchmark description: one base corpus, `transitions` churned
/// successors, `queries` synthetic reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSpec {
    pub corpus: SynthConfig,
    pub churn: Churn,
    pub transitions: usize,
    pub queries: usize,
    pub query_terms: usize,
    pub options: BenchOptions,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            corpus: SynthConfig::default(),
            churn: Churn::default(),
            transitions: 3,
            queries: 5,
            query_terms: 30,
            options: BenchOptions::default(),
        }
    }
}

/// Generates the states and reports for `spec` and runs [`bench_compare`].
pub fn run_synthetic(spec: &BenchSpec, params: RankParams) -> Result<Vec<BenchReport>> {
    let mut synth = Synth::new(spec.corpus);
    let mut states = vec![synth.repo()];
    for _ in 0..spec.transitions.max(1) {
        let next = synth.evolve(states.last().expect("nonempty"), spec.churn);
        states.push(next);
    }
    let reports: Vec<BugReport> = (0..spec.queries)
        .map(|i| synth.report(&format!("Q{i}"), spec.query_terms))
        .collect();
    bench_compare(&states, &reports, &History::new(), params, spec.options)
}

/// Median of the per-transition ratios.
pub fn median_ratio(reports: &[BenchReport]) -> Option<f64> {
    if reports.is_empty() {
        return None;
    }
    let mut r: Vec<f64> = reports.iter().map(|b| b.ratio).collect();
    r.sort_by(f64::total_cmp);
    let n = r.len();
    Some(if n % 2 == 1 { r[n / 2] } else { (r[n / 2 - 1] + r[n / 2]) / 2.0 })
}
