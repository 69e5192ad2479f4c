//! Change detection between invocations and model persistence.
//!
//! A scan fingerprints every recognized source file by content hash.
//! Comparing two fingerprint maps yields the paths to add, delete and
//! re-read; only those files are preprocessed.

mod snapshot;

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use globset::{Glob, GlobSet, GlobSetBuilder};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

pub use snapshot::{load_snapshot, save_snapshot, FORMAT_VERSION, MAGIC};

use crate::error::{Error, Result};
use crate::preprocess::{build_code_document, is_source_path};
use crate::vsm::{ChangeSet, DocContent};

/// SHA-256 digest of a file's bytes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> Self {
        ContentHash(Sha256::digest(bytes).into())
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileFingerprint {
    pub path: String,
    pub content_hash: ContentHash,
    pub size: u64,
}

pub type FingerprintMap = BTreeMap<String, FileFingerprint>;

const DEFAULT_IGNORE: &str = include_str!("../../data/default_ignore.txt");

/// Glob patterns excluded from scans. A pattern without `/` matches a path
/// component at any depth; matching a directory prunes it.
#[derive(Debug, Clone)]
pub struct IgnoreRules {
    set: GlobSet,
}

impl IgnoreRules {
    pub fn parse(text: &str) -> Result<Self> {
        let mut builder = GlobSetBuilder::new();
        for (i, line) in text.lines().enumerate() {
            let pat = line.split('#').next().unwrap_or("").trim();
            if pat.is_empty() {
                continue;
            }
            let pat = pat.trim_end_matches('/');
            let anchored = pat.trim_start_matches('/');
            let full = if pat.contains('/') {
                anchored.to_string()
            } else {
                format!("**/{pat}")
            };
            let glob = Glob::new(&full)
                .map_err(|e| Error::IgnorePattern(format!("line {}: {pat:?}: {e}", i + 1)))?;
            builder.add(glob);
        }
        let set = builder
            .build()
            .map_err(|e| Error::IgnorePattern(e.to_string()))?;
        Ok(IgnoreRules { set })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn is_ignored(&self, rel_path: &str) -> bool {
        self.set.is_match(rel_path)
    }
}

impl Default for IgnoreRules {
    fn default() -> Self {
        Self::parse(DEFAULT_IGNORE).expect("shipped ignore list parses")
    }
}

/// Result of walking a repository.
#[derive(Debug, Clone, Default)]
pub struct Scan {
    pub files: FingerprintMap,
    /// Files that could not be read, with the reason.
    pub warnings: Vec<String>,
}

fn relative(root: &Path, path: &Path) -> Option<String> {
    let rel = path.strip_prefix(root).ok()?;
    let parts: Vec<&str> = rel
        .components()
        .map(|c| c.as_os_str().to_str())
        .collect::<Option<_>>()?;
    Some(parts.join("/"))
}

/// Fingerprints every recognized source file under `root`, in path order.
pub fn scan_repo(root: &Path, ignore: &IgnoreRules) -> Result<Scan> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            io::Error::new(io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let mut scan = Scan::default();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            e.depth() == 0
                || relative(root, e.path()).is_some_and(|rel| !ignore.is_ignored(&rel))
        });
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) if e.depth() == 0 => {
                return Err(Error::io(root, e.into()));
            }
            Err(e) => {
                scan.warnings.push(e.to_string());
                continue;
            }
        };
        if !entry.file_type().is_file() || !is_source_path(entry.path()) {
            continue;
        }
        let Some(rel) = relative(root, entry.path()) else {
            scan.warnings
                .push(format!("{}: non-UTF-8 path skipped", entry.path().display()));
            continue;
        };
        match std::fs::read(entry.path()) {
            Ok(bytes) => {
                scan.files.insert(
                    rel.clone(),
                    FileFingerprint {
                        path: rel,
                        content_hash: ContentHash::of(&bytes),
                        size: bytes.len() as u64,
                    },
                );
            }
            Err(e) => scan.warnings.push(format!("{}: {e}", entry.path().display())),
        }
    }
    Ok(scan)
}

/// Paths that differ between two scans.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PendingChanges {
    pub added: Vec<String>,
    pub deleted: Vec<String>,
    pub modified: Vec<String>,
}

impl PendingChanges {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.deleted.is_empty() && self.modified.is_empty()
    }

    pub fn len(&self) -> usize {
        self.added.len() + self.deleted.len() + self.modified.len()
    }
}

/// Compares path → hash maps. Nothing is read from disk.
pub fn detect_changes<'a, O, N>(old: O, new: N) -> PendingChanges
where
    O: IntoIterator<Item = (&'a str, ContentHash)>,
    N: IntoIterator<Item = (&'a str, ContentHash)>,
{
    let old: BTreeMap<&str, ContentHash> = old.into_iter().collect();
    let new: BTreeMap<&str, ContentHash> = new.into_iter().collect();
    let mut pending = PendingChanges::default();
    for (path, hash) in &new {
        match old.get(path) {
            None => pending.added.push(path.to_string()),
            Some(h) if h != hash => pending.modified.push(path.to_string()),
            Some(_) => {}
        }
    }
    for path in old.keys() {
        if !new.contains_key(path) {
            pending.deleted.push(path.to_string());
        }
    }
    pending
}

/// Hashes of a fingerprint map, in the form [`detect_changes`] takes.
pub fn hashes(map: &FingerprintMap) -> impl Iterator<Item = (&str, ContentHash)> {
    map.iter().map(|(p, f)| (p.as_str(), f.content_hash))
}

/// Where file contents come from during an update.
pub trait FileSource {
    fn read(&self, path: &str) -> io::Result<Vec<u8>>;
}

/// Reads files under a root directory and counts reads.
#[derive(Debug)]
pub struct FsSource {
    root: PathBuf,
    reads: AtomicUsize,
}

impl FsSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FsSource {
            root: root.into(),
            reads: AtomicUsize::new(0),
        }
    }

    pub fn reads(&self) -> usize {
        self.reads.load(Ordering::Relaxed)
    }
}

impl FileSource for FsSource {
    fn read(&self, path: &str) -> io::Result<Vec<u8>> {
        self.reads.fetch_add(1, Ordering::Relaxed);
        std::fs::read(self.root.join(path))
    }
}

/// In-memory file tree; used by the benchmark harness and tests.
impl FileSource for BTreeMap<String, String> {
    fn read(&self, path: &str) -> io::Result<Vec<u8>> {
        self.get(path)
            .map(|s| s.as_bytes().to_vec())
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, path.to_string()))
    }
}

/// Preprocesses one file into a change-set entry. Invalid UTF-8 is replaced.
pub fn load_document(source: &dyn FileSource, path: &str) -> Result<DocContent> {
    let bytes = source.read(path).map_err(|e| Error::io(path, e))?;
    let hash = ContentHash::of(&bytes);
    let text = String::from_utf8_lossy(&bytes);
    let counts = build_code_document(Path::new(path), &text)?;
    Ok(DocContent::new(path, counts).with_hash(hash))
}

/// Reads and preprocesses exactly the added and modified files.
pub fn materialize(pending: &PendingChanges, source: &dyn FileSource) -> Result<ChangeSet> {
    let load = |paths: &[String]| -> Result<Vec<DocContent>> {
        paths.iter().map(|p| load_document(source, p)).collect()
    };
    Ok(ChangeSet {
        added: load(&pending.added)?,
        deleted: pending.deleted.clone(),
        modified: load(&pending.modified)?,
    })
}
