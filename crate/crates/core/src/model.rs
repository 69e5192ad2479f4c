//! The full localization model: code corpus, report history and ranking
//! parameters, plus the single-writer handle readers take snapshots from.

use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use crate::error::Result;
use crate::history::{BugReport, History};
use crate::ingest::{
    detect_changes, hashes, materialize, scan_repo, ContentHash, FileSource, FsSource,
    IgnoreRules, PendingChanges,
};
use crate::ranker::{self, RankParams, RankedList};
use crate::vsm::{ChangeSet, UpdateReport, VsmIndex};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub code: VsmIndex,
    pub history: History,
    pub params: RankParams,
}

/// Outcome of syncing the model with a directory.
#[derive(Debug, Clone, Default)]
pub struct SyncOutcome {
    pub pending: PendingChanges,
    pub update: UpdateReport,
    pub warnings: Vec<String>,
    /// Files read for preprocessing.
    pub files_read: usize,
}

impl Model {
    pub fn new(params: RankParams) -> Self {
        Model {
            params,
            ..Default::default()
        }
    }

    /// Path → content hash of every indexed code file.
    pub fn fingerprints(&self) -> impl Iterator<Item = (&str, ContentHash)> {
        self.code
            .matrix()
            .docs()
            .map(|(_, e)| (e.path.as_str(), e.content_hash))
    }

    pub fn apply(&mut self, changes: ChangeSet) -> Result<UpdateReport> {
        self.code.apply_change_set(changes)
    }

    /// Brings the code model in line with `root`. Only added and modified
    /// files are read.
    pub fn sync_with_dir(&mut self, root: &Path, ignore: &IgnoreRules) -> Result<SyncOutcome> {
        let scan = scan_repo(root, ignore)?;
        let pending = detect_changes(self.fingerprints(), hashes(&scan.files));
        let source = FsSource::new(root);
        let mut outcome = self.sync_pending(pending, &source)?;
        outcome.files_read = source.reads();
        outcome.warnings = scan.warnings;
        Ok(outcome)
    }

    pub fn sync_pending(&mut self, pending: PendingChanges, source: &dyn FileSource) -> Result<SyncOutcome> {
        let changes = materialize(&pending, source)?;
        let update = self.apply(changes)?;
        Ok(SyncOutcome {
            pending,
            update,
            ..Default::default()
        })
    }

    /// Full index of a directory from scratch.
    pub fn index_dir(root: &Path, ignore: &IgnoreRules, params: RankParams) -> Result<(Model, Vec<String>)> {
        let scan = scan_repo(root, ignore)?;
        let pending = PendingChanges {
            added: scan.files.keys().cloned().collect(),
            ..Default::default()
        };
        let changes = materialize(&pending, &FsSource::new(root))?;
        let model = Model {
            code: VsmIndex::rebuild_full(changes.added),
            history: History::new(),
            params,
        };
        Ok((model, scan.warnings))
    }

    pub fn rank(&self, report: &BugReport) -> Result<RankedList> {
        ranker::rank(&self.code, &self.history, report, self.params)
    }

    pub fn rank_all(&self, report: &BugReport) -> Result<RankedList> {
        ranker::rank_all(&self.code, &self.history, report, self.params.alpha)
    }

    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        self.code.check_invariants()?;
        self.history.check_invariants()
    }
}

/// Single writer, many readers. Readers hold an `Arc` to an immutable model;
/// the writer works on a private copy and publishes it in one swap.
#[derive(Debug, Default)]
pub struct ModelHandle {
    writer: Mutex<()>,
    current: RwLock<Arc<Model>>,
}

impl ModelHandle {
    pub fn new(model: Model) -> Self {
        ModelHandle {
            writer: Mutex::new(()),
            current: RwLock::new(Arc::new(model)),
        }
    }

    pub fn snapshot(&self) -> Arc<Model> {
        Arc::clone(&self.current.read().expect("model lock poisoned"))
    }

    /// Runs `f` against a copy of the current model and publishes the copy
    /// only if `f` succeeds.
    pub fn update<T>(&self, f: impl FnOnce(&mut Model) -> Result<T>) -> Result<T> {
        let _writer = self.writer.lock().expect("writer lock poisoned");
        let mut working = Model::clone(&self.snapshot());
        let out = f(&mut working)?;
        *self.current.write().expect("model lock poisoned") = Arc::new(working);
        Ok(out)
    }
}
