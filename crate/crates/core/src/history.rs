//! Past fixed bug reports, their links to source files, and the
//! history-similarity score.
//!
//! Reports live in their own [`VsmIndex`] keyed by report id, so the report
//! corpus is maintained with the same incremental machinery as the code.
//! A file's history score for a new report is the mean cosine similarity
//! between that report and every past report that fixed the file.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::build_report_document;
use crate::vsm::{cosine, ChangeSet, DocContent, DocVector, VsmIndex};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_files: Option<Vec<String>>,
    #[serde(default)]
    pub created_at: DateTime<Utc>,
}

impl BugReport {
    pub fn new(id: impl Into<String>, title: impl Into<String>, description: impl Into<String>) -> Self {
        BugReport {
            id: id.into(),
            title: title.into(),
            description: description.into(),
            fixed_files: None,
            created_at: DateTime::<Utc>::default(),
        }
    }

    pub fn with_fixed_files<I, S>(mut self, files: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.fixed_files = Some(files.into_iter().map(Into::into).collect());
        self
    }

    /// Fixed files, deduplicated and sorted. Empty when absent.
    pub fn fixed_set(&self) -> BTreeSet<String> {
        self.fixed_files.iter().flatten().cloned().collect()
    }
}

/// Parses JSON-lines bug reports. Blank lines are skipped; unknown keys are
/// ignored.
pub fn parse_reports(text: &str) -> Result<Vec<BugReport>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::ReportParse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Inverse of the report → fixed-files relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkTable {
    file_to_reports: BTreeMap<String, BTreeSet<String>>,
}

impl LinkTable {
    pub fn from_reports<'a>(reports: impl IntoIterator<Item = &'a BugReport>) -> Self {
        let mut table = LinkTable::default();
        for r in reports {
            table.link(&r.id, &r.fixed_set());
        }
        table
    }

    fn link(&mut self, id: &str, files: &BTreeSet<String>) {
        for f in files {
            self.file_to_reports
                .entry(f.clone())
                .or_default()
                .insert(id.to_string());
        }
    }

    fn unlink(&mut self, id: &str, files: &BTreeSet<String>) {
        for f in files {
            if let Some(ids) = self.file_to_reports.get_mut(f) {
                ids.remove(id);
                if ids.is_empty() {
                    self.file_to_reports.remove(f);
                }
            }
        }
    }

    /// Report ids linked to `path`; `l(m)`.
    pub fn reports_for(&self, path: &str) -> Option<&BTreeSet<String>> {
        self.file_to_reports.get(path)
    }

    pub fn is_empty(&self) -> bool {
        self.file_to_reports.is_empty()
    }

    pub fn len(&self) -> usize {
        self.file_to_reports.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.file_to_reports.iter().map(|(p, ids)| (p.as_str(), ids))
    }
}

/// Past fixed reports plus their incrementally maintained corpus model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    reports: BTreeMap<String, BugReport>,
    index: VsmIndex,
    links: LinkTable,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn index(&self) -> &VsmIndex {
        &self.index
    }

    pub fn links(&self) -> &LinkTable {
        &self.links
    }

    pub fn reports(&self) -> impl Iterator<Item = &BugReport> {
        self.reports.values()
    }

    pub fn get(&self, id: &str) -> Option<&BugReport> {
        self.reports.get(id)
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    /// Stores a fixed report and adds it to the report corpus.
    pub fn add_fixed_report(&mut self, mut report: BugReport) -> Result<()> {
        if self.reports.contains_key(&report.id) {
            return Err(Error::DuplicateReport(report.id));
        }
        let files = report.fixed_set();
        if files.is_empty() {
            return Err(Error::MissingFixedFiles(report.id));
        }
        let counts = build_report_document(&report)?;
        self.index.apply_change_set(ChangeSet {
            added: vec![DocContent::new(report.id.clone(), counts)],
            ..Default::default()
        })?;
        self.links.link(&report.id, &files);
        report.fixed_files = Some(files.into_iter().collect());
        self.reports.insert(report.id.clone(), report);
        Ok(())
    }

    pub fn remove_report(&mut self, id: &str) -> Result<BugReport> {
        let report = self
            .reports
            .get(id)
            .ok_or_else(|| Error::ReportNotFound(id.to_string()))?;
        self.index.apply_change_set(ChangeSet {
            deleted: vec![id.to_string()],
            ..Default::default()
        })?;
        self.links.unlink(id, &report.fixed_set());
        Ok(self.reports.remove(id).expect("checked above"))
    }

    /// Replaces a report's fixed files. The report text, and therefore the
    /// report corpus, is unchanged.
    pub fn relink_report<I, S>(&mut self, id: &str, fixed_files: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let new: BTreeSet<String> = fixed_files.into_iter().map(Into::into).collect();
        let report = self
            .reports
            .get_mut(id)
            .ok_or_else(|| Error::ReportNotFound(id.to_string()))?;
        if new.is_empty() {
            return Err(Error::MissingFixedFiles(id.to_string()));
        }
        let old = report.fixed_set();
        if old == new {
            return Ok(());
        }
        report.fixed_files = Some(new.iter().cloned().collect());
        self.links.unlink(id, &old);
        self.links.link(id, &new);
        Ok(())
    }

    /// Vectorizes a new report against the report corpus (out-of-vocabulary
    /// terms dropped) and scores it against every stored report.
    pub fn similarities(&self, query: &BugReport) -> Result<HistoryScores<'_>> {
        let counts = build_report_document(query)?;
        let query_vec = self.index.vectorize_query(&counts);
        self.similarities_for_vector(&query_vec)
    }

    pub fn similarities_for_vector(&self, query_vec: &DocVector) -> Result<HistoryScores<'_>> {
        let mut by_report = BTreeMap::new();
        for id in self.reports.keys() {
            let v = self.index.doc_vector_by_path(id)?;
            by_report.insert(id.clone(), cosine(query_vec, &v));
        }
        Ok(HistoryScores {
            by_report,
            links: &self.links,
        })
    }

    /// `SimiScore` of one file for one query report. Prefer
    /// [`History::similarities`] when scoring many files.
    pub fn simi_score(&self, query: &BugReport, path: &str) -> Result<f64> {
        Ok(self.similarities(query)?.simi_score(path))
    }

    /// Checks the link table against a fresh inversion of the stored
    /// reports, and the report corpus against its documents.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if LinkTable::from_reports(self.reports.values()) != self.links {
            return Err("link table is not the inverse of fixed_files".into());
        }
        let ids: BTreeSet<&str> = self.reports.keys().map(String::as_str).collect();
        let docs: BTreeSet<&str> = self
            .index
            .matrix()
            .docs()
            .map(|(_, e)| e.path.as_str())
            .collect();
        if ids != docs {
            return Err("report store and report corpus disagree".into());
        }
        self.index.check_invariants()
    }

    pub(crate) fn from_parts(
        reports: Vec<BugReport>,
        index: VsmIndex,
        links: LinkTable,
    ) -> std::result::Result<Self, String> {
        let history = History {
            reports: reports.into_iter().map(|r| (r.id.clone(), r)).collect(),
            index,
            links,
        };
        history.check_invariants()?;
        Ok(history)
    }
}

/// Cosine similarity of one query report to each stored report.
#[derive(Debug, Clone)]
pub struct HistoryScores<'a> {
    by_report: BTreeMap<String, f64>,
    links: &'a LinkTable,
}

impl HistoryScores<'_> {
    pub fn similarity(&self, report_id: &str) -> Option<f64> {
        self.by_report.get(report_id).copied()
    }

    /// Mean similarity over the reports linked to `path`; 0 when none are.
    pub fn simi_score(&self, path: &str) -> f64 {
        let Some(ids) = self.links.reports_for(path) else {
            return 0.0;
        };
        let sum: f64 = ids.iter().filter_map(|id| self.similarity(id)).sum();
        sum / ids.len() as f64
    }
}
