//! Retrieval accuracy metrics and the incremental-vs-rebuild benchmark.

mod bench;
mod metrics;
pub mod synth;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use bench::{bench_compare, median_ratio, run_synthetic, BenchOptions, BenchReport, BenchSpec};
pub use metrics::{average_precision, mean_average_precision, top_n_accuracy, JudgedCase};

use crate::error::{Error, Result};
use crate::history::BugReport;
use crate::model::Model;

/// A report whose fixed files are the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub report: BugReport,
    #[serde(default)]
    pub corpus_label: String,
}

impl EvalCase {
    pub fn new(report: BugReport) -> Self {
        EvalCase {
            report,
            corpus_label: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub map: f64,
    pub top_1: f64,
    pub top_3: f64,
    pub top_10: f64,
    pub n_judgeable: usize,
    pub n_excluded: usize,
}

impl fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>8}", "metric", "value")?;
        writeln!(f, "{:<12} {:>8.4}", "MAP", self.map)?;
        writeln!(f, "{:<12} {:>8.4}", "Top-1", self.top_1)?;
        writeln!(f, "{:<12} {:>8.4}", "Top-3", self.top_3)?;
        writeln!(f, "{:<12} {:>8.4}", "Top-10", self.top_10)?;
        writeln!(f, "{:<12} {:>8}", "judgeable", self.n_judgeable)?;
        write!(f, "{:<12} {:>8}", "excluded", self.n_excluded)
    }
}

/// Ranks every case against `model` over the full list. The relevant set of
/// a case is its fixed files that are present in the code corpus; cases
/// with none are excluded. A case whose id is stored in the history is
/// ranked with that report left out.
pub fn judge(model: &Model, cases: &[EvalCase]) -> Result<(Vec<JudgedCase>, usize)> {
    let mut judged = Vec::new();
    let mut excluded = 0;
    for case in cases {
        let relevant: BTreeSet<String> = case
            .report
            .fixed_set()
            .into_iter()
            .filter(|p| model.code.doc_id(p).is_some())
            .collect();
        if relevant.is_empty() {
            excluded += 1;
            continue;
        }
        let ranked = if model.history.get(&case.report.id).is_some() {
            let mut history = model.history.clone();
            history.remove_report(&case.report.id)?;
            crate::ranker::rank_all(&model.code, &history, &case.report, model.params.alpha)?
        } else {
            model.rank_all(&case.report)?
        };
        judged.push(JudgedCase {
            ranking: ranked.paths().into_iter().map(str::to_string).collect(),
            relevant,
        });
    }
    Ok((judged, excluded))
}

pub fn evaluate(model: &Model, cases: &[EvalCase]) -> Result<EvalSummary> {
    let (judged, excluded) = judge(model, cases)?;
    if judged.is_empty() {
        return Err(Error::NoJudgeableCases);
    }
    Ok(EvalSummary {
        map: mean_average_precision(&judged)?,
        top_1: top_n_accuracy(&judged, 1)?,
        top_3: top_n_accuracy(&judged, 3)?,
        top_10: top_n_accuracy(&judged, 10)?,
        n_judgeable: judged.len(),
        n_excluded: excluded,
    })
}
