//! Fixtures shared by the criterion benches.

use bugloc::evalbench::synth::{Churn, RepoState, Synth, SynthConfig};
use bugloc::ingest::{materialize, PendingChanges};
use bugloc::{BugReport, Model, VsmIndex};

/// A base model, the repository state it was built from, a churned
/// successor, and a batch of queries.
pub struct Scenario {
    pub base: Model,
    pub before: RepoState,
    pub after: RepoState,
    pub queries: Vec<BugReport>,
}

pub fn scenario(config: SynthConfig, churn: Churn, queries: usize) -> Scenario {
    let mut synth = Synth::new(config);
    let before = synth.repo();
    let after = synth.evolve(&before, churn);
    let queries = (0..queries).map(|i| synth.report(&format!("Q{i}"), 30)).collect();
    Scenario {
        base: build(&before),
        before,
        after,
        queries,
    }
}

/// Preprocesses every file and rebuilds from scratch.
pub fn build(state: &RepoState) -> Model {
    let pending = PendingChanges {
        added: state.keys().cloned().collect(),
        ..Default::default()
    };
    let docs = materialize(&pending, state).expect("synthetic files preprocess").added;
    Model {
        code: VsmIndex::rebuild_full(docs),
        ..Default::default()
    }
}
