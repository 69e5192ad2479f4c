//! Bug localization over source trees with an incrementally maintained
//! tf-idf model.
//!
//! A [`Model`] holds the code corpus index, the history of fixed reports,
//! and ranking parameters. Changes to the source tree are applied as
//! [`ChangeSet`]s without recomputing unaffected weights; the result is the
//! same model a full rebuild would produce.

pub mod error;
pub mod evalbench;
pub mod history;
pub mod ingest;
pub mod model;
pub mod preprocess;
pub mod ranker;
pub mod vsm;

pub use error::{Error, PathError, Result, SnapshotError};
pub use history::{parse_reports, BugReport, History, LinkTable};
pub use ingest::{load_snapshot, save_snapshot, ContentHash, IgnoreRules, PendingChanges};
pub use model::{Model, ModelHandle, SyncOutcome};
pub use preprocess::TermCounts;
pub use ranker::{RankParams, RankedFile, RankedList};
pub use vsm::{ChangeSet, DocContent, DocId, TermId, UpdateReport, VsmIndex};
