//! `bugloc` command implementations. [`run`] takes explicit streams so the
//! commands can be driven in-process.

use std::ffi::OsString;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use bugloc::evalbench::{self, BenchOptions, BenchSpec, EvalCase};
use bugloc::{
    load_snapshot, parse_reports, save_snapshot, BugReport, Error, History, IgnoreRules, Model,
    RankParams, RankedList,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const SNAPSHOT_FILE: &str = "model.snap";
pub const LOCK_FILE: &str = "bugloc.lock";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_STATE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bugloc", version, about = "Rank source files against bug reports, updating the model incrementally")]
pub struct Cli {
    #[command(flatten)]
    pub config: Config,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Config {
    /// Source tree to index.
    #[arg(long, global = true)]
    pub code: Option<PathBuf>,
    /// Directory holding the model snapshot.
    #[arg(long, global = true, env = "INCBL_DATA")]
    pub data: Option<PathBuf>,
    /// JSON-lines file of fixed bug reports loaded into the history at index time.
    #[arg(long, global = true)]
    pub reports: Option<PathBuf>,
    /// Weight of the length-scaled text score; the history score gets 1 - alpha.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Number of files to print.
    #[arg(long = "top-k", global = true)]
    pub top_k: Option<usize>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Glob patterns to skip, one per line; replaces the built-in list.
    #[arg(long = "ignore-file", global = true)]
    pub ignore_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan the source tree and build the model from scratch.
    Index,
    /// Apply source changes since the last snapshot.
    Update,
    /// Rank files for a bug report read from a file or standard input.
    Localize {
        /// Report file: a JSON object, or plain text whose first line is the title.
        report: Option<PathBuf>,
        /// Rank against the stored snapshot without updating or locking it.
        #[arg(long)]
        read_only: bool,
    },
    /// Add fixed bug reports (JSON lines) to the history.
    AddReport { file: PathBuf },
    /// Score the model against reports whose fixed files are the ground truth.
    Eval { cases: PathBuf },
    /// Time incremental updates against full rebuilds on a synthetic corpus.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// JSON bench specification; flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub docs: Option<usize>,
    #[arg(long)]
    pub vocab: Option<usize>,
    /// Fraction of documents rewritten per transition.
    #[arg(long)]
    pub churn: Option<f64>,
    #[arg(long)]
    pub transitions: Option<usize>,
    /// Reader threads ranking concurrently with the incremental path.
    #[arg(long)]
    pub readers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// A failed command: exit status plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn state(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_STATE,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. }
            | Error::Snapshot(_)
            | Error::DfUnderflow { .. }
            | Error::LengthOutOfRange { .. }
            | Error::RankingMismatch { .. }
            | Error::ChangeSetRejected(_)
            | Error::InvalidCorpus { .. } => EXIT_STATE,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli, stdin, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let cfg = &cli.config;
    match &cli.command {
        Command::Index => cmd_index(cfg, out, err),
        Command::Update => cmd_update(cfg, out, err),
        Command::Localize { report, read_only } => {
            let report = read_report(report.as_deref(), stdin)?;
            cmd_localize(cfg, &report, *read_only, out, err)
        }
        Command::AddReport { file } => cmd_add_report(cfg, file, out),
        Command::Eval { cases } => cmd_eval(cfg, cases, out),
        Command::Bench(args) => cmd_bench(cfg, args, out),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::state(format!("{}: {e}", path.display()))
}

fn data_dir(cfg: &Config) -> Result<&Path, Failure> {
    cfg.data.as_deref().ok_or(Failure {
        code: EXIT_USAGE,
        message: "--data (or INCBL_DATA) is required".into(),
    })
}

fn code_dir(cfg: &Config) -> Result<&Path, Failure> {
    let code = cfg.code.as_deref().ok_or(Failure {
        code: EXIT_USAGE,
        message: "--code is required".into(),
    })?;
    if !code.is_dir() {
        return Err(Failure::input(format!("{}: not a directory", code.display())));
    }
    Ok(code)
}

fn ignore_rules(cfg: &Config) -> Result<IgnoreRules, Failure> {
    match &cfg.ignore_file {
        Some(p) => Ok(IgnoreRules::from_file(p)?),
        None => Ok(IgnoreRules::default()),
    }
}

/// Parameters from flags, falling back to `base`.
fn params(cfg: &Config, base: RankParams) -> Result<RankParams, Failure> {
    Ok(RankParams::new(
        cfg.alpha.unwrap_or(base.alpha),
        cfg.top_k.unwrap_or(base.top_k),
    )?)
}

/// Exclusive hold on a data directory, released on drop.
struct DataLock {
    path: PathBuf,
    _file: File,
}

impl DataLock {
    fn acquire(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        let path = dir.join(LOCK_FILE);
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => Failure::state(format!(
                    "{} is locked by another process (remove {} if stale)",
                    dir.display(),
                    path.display()
                )),
                _ => io_failure(&path, e),
            })?;
        let _ = writeln!(file, "{}", std::process::id());
        Ok(DataLock { path, _file: file })
    }
}

impl Drop for DataLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

fn snapshot_path(dir: &Path) -> PathBuf {
    dir.join(SNAPSHOT_FILE)
}

fn load_model(dir: &Path) -> Result<Model, Failure> {
    let path = snapshot_path(dir);
    if !path.exists() {
        return Err(Failure::state(format!(
            "no model at {}; run `bugloc index` first",
            path.display()
        )));
    }
    Ok(load_snapshot(&path)?)
}

fn warn_all(err: &mut dyn Write, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
}

fn emit(out: &mut dyn Write, text: std::fmt::Arguments) -> CmdResult {
    out.write_fmt(text)
        .map_err(|e| Failure::state(format!("writing output: {e}")))
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CmdResult {
    let line = serde_json::to_string(value).map_err(|e| Failure::state(e.to_string()))?;
    emit(out, format_args!("{line}\n"))
}

pub fn cmd_index(cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let data = data_dir(cfg)?;
    let code = code_dir(cfg)?;
    let ignore = ignore_rules(cfg)?;
    let params = params(cfg, RankParams::default())?;
    let _lock = DataLock::acquire(data)?;
    let start = Instant::now();
    let (mut model, warnings) = Model::index_dir(code, &ignore, params)?;
    warn_all(err, &warnings);
    if let Some(reports) = &cfg.reports {
        model.history = load_history(reports)?;
    }
    save_snapshot(&model, &snapshot_path(data))?;
    let elapsed = start.elapsed().as_secs_f64();
    if cfg.json {
        emit_json(
            out,
            &serde_json::json!({
                "m": model.code.m(),
                "vocabulary": model.code.vocab().len(),
                "reports": model.history.len(),
                "elapsed_s": elapsed,
            }),
        )
    } else {
        emit(
            out,
            format_args!(
                "indexed M={} |V|={} reports={} in {elapsed:.3}s\n",
                model.code.m(),
                model.code.vocab().len(),
                model.history.len()
            ),
        )
    }
}

fn load_history(path: &Path) -> Result<History, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut history = History::new();
    for report in parse_reports(&text)? {
        history.add_fixed_report(report)?;
    }
    Ok(history)
}

/// Syncs `model` with the source tree and reports what moved.
fn update_model(cfg: &Config, model: &mut Model, out: &mut dyn Write, err: &mut dyn Write, quiet: bool) -> CmdResult {
    let code = code_dir(cfg)?;
    let ignore = ignore_rules(cfg)?;
    let outcome = model.sync_with_dir(code, &ignore)?;
    warn_all(err, &outcome.warnings);
    if quiet {
        return Ok(());
    }
    let p = &outcome.pending;
    let u = &outcome.update;
    if cfg.json {
        emit_json(
            out,
            &serde_json::json!({
                "changes": p.len(),
                "added": p.added,
                "deleted": p.deleted,
                "modified": p.modified,
                "delta_m": u.delta_m,
                "touched_docs": u.touched_docs.len(),
                "touched_terms": u.touched_terms.len(),
                "files_read": outcome.files_read,
                "m": model.code.m(),
            }),
        )
    } else {
        emit(
            out,
            format_args!(
                "{} changes (+{} -{} ~{}) delta_M={} touched_docs={} touched_terms={} M={}\n",
                p.len(),
                p.added.len(),
                p.deleted.len(),
                p.modified.len(),
                u.delta_m,
                u.touched_docs.len(),
                u.touched_terms.len(),
                model.code.m()
            ),
        )
    }
}

pub fn cmd_update(cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let data = data_dir(cfg)?;
    let _lock = DataLock::acquire(data)?;
    let mut model = load_model(data)?;
    update_model(cfg, &mut model, out, err, false)?;
    save_snapshot(&model, &snapshot_path(data))?;
    Ok(())
}

/// A report from JSON, or from plain text (first line title, rest
/// description).
pub fn parse_query(text: &str) -> Result<BugReport, Failure> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(Failure::input("empty bug report"));
    }
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed).map_err(|e| Failure::input(format!("invalid report JSON: {e}")));
    }
    let (title, description) = trimmed.split_once('\n').unwrap_or((trimmed, ""));
    Ok(BugReport::new("query", title.trim(), description.trim()))
}

fn read_report(path: Option<&Path>, stdin: &mut dyn Read) -> Result<BugReport, Failure> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| io_failure(p, e))?,
        None => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| Failure::state(format!("reading standard input: {e}")))?;
            s
        }
    };
    parse_query(&text)
}

#[derive(Serialize)]
struct RankedLine<'a> {
    rank: usize,
    path: &'a str,
    relevance: f64,
    vsm_component: f64,
    simi_component: f64,
}

pub fn cmd_localize(cfg: &Config, report: &BugReport, read_only: bool, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let data = data_dir(cfg)?;
    let model = if read_only {
        load_model(data)?
    } else {
        let _lock = DataLock::acquire(data)?;
        let mut model = load_model(data)?;
        update_model(cfg, &mut model, out, err, true)?;
        save_snapshot(&model, &snapshot_path(data))?;
        model
    };
    let params = params(cfg, model.params)?;
    let mut ranked = bugloc::ranker::rank_all(&model.code, &model.history, report, params.alpha)?;
    if ranked.entries.iter().all(|f| f.relevance == 0.0) {
        let _ = writeln!(err, "warning: report shares no scored terms with the corpus or history; order is by path");
    }
    ranked.truncate(params.top_k);
    print_ranking(cfg, &ranked, out)
}

fn print_ranking(cfg: &Config, ranked: &RankedList, out: &mut dyn Write) -> CmdResult {
    for (i, f) in ranked.entries.iter().enumerate() {
        if cfg.json {
            emit_json(
                out,
                &RankedLine {
                    rank: i + 1,
                    path: &f.path,
                    relevance: f.relevance,
                    vsm_component: f.vsm_component,
                    simi_component: f.simi_component,
                },
            )?;
        } else {
            emit(
                out,
                format_args!(
                    "{:>3}  {:>10.6}  {:>9.6}  {:>9.6}  {}\n",
                    i + 1,
                    f.relevance,
                    f.vsm_component,
                    f.simi_component,
                    f.path
                ),
            )?;
        }
    }
    Ok(())
}

pub fn cmd_add_report(cfg: &Config, file: &Path, out: &mut dyn Write) -> CmdResult {
    let data = data_dir(cfg)?;
    let _lock = DataLock::acquire(data)?;
    let mut model = load_model(data)?;
    let text = std::fs::read_to_string(file).map_err(|e| io_failure(file, e))?;
    let reports = parse_reports(&text)?;
    if reports.is_empty() {
        return Err(Failure::input(format!("{}: no reports", file.display())));
    }
    let n = reports.len();
    for report in reports {
        model.history.add_fixed_report(report)?;
    }
    save_snapshot(&model, &snapshot_path(data))?;
    emit(out, format_args!("added {n} reports; history holds {}\n", model.history.len()))
}

pub fn cmd_eval(cfg: &Config, cases: &Path, out: &mut dyn Write) -> CmdResult {
    let data = data_dir(cfg)?;
    let mut model = load_model(data)?;
    model.params = params(cfg, model.params)?;
    let text = std::fs::read_to_string(cases).map_err(|e| io_failure(cases, e))?;
    let cases: Vec<EvalCase> = parse_reports(&text)?.into_iter().map(EvalCase::new).collect();
    let summary = evalbench::evaluate(&model, &cases)?;
    if cfg.json {
        emit_json(out, &summary)
    } else {
        emit(out, format_args!("{summary}\n"))
    }
}

pub fn cmd_bench(cfg: &Config, args: &BenchArgs, out: &mut dyn Write) -> CmdResult {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
            serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?
        }
        None => BenchSpec::default(),
    };
    if let Some(v) = args.docs {
        spec.corpus.docs = v;
    }
    if let Some(v) = args.vocab {
        spec.corpus.vocab = v;
    }
    if let Some(v) = args.churn {
        spec.churn.modify = v;
    }
    if let Some(v) = args.transitions {
        spec.transitions = v;
    }
    if let Some(v) = args.seed {
        spec.corpus.seed = v;
    }
    spec.options = BenchOptions {
        concurrent_readers: args.readers.unwrap_or(spec.options.concurrent_readers),
        ..spec.options
    };
    if spec.corpus.docs == 0 || spec.corpus.vocab == 0 {
        return Err(Failure::input("bench corpus needs at least one document and one term"));
    }
    let params = params(cfg, RankParams::default())?;
    let reports = evalbench::run_synthetic(&spec, params)?;
    let median = evalbench::median_ratio(&reports).unwrap_or(f64::NAN);
    if cfg.json {
        return emit_json(out, &serde_json::json!({ "transitions": reports, "median_ratio": median }));
    }
    emit(out, format_args!("{:>4}  {:>10}  {:>10}  {:>7}  {:>7}  {:>6}\n", "tr", "t_inc(s)", "t_full(s)", "ratio", "touched", "M"))?;
    for r in &reports {
        emit(
            out,
            format_args!(
                "{:>4}  {:>10.4}  {:>10.4}  {:>7.4}  {:>7}  {:>6}\n",
                r.transition, r.t_inc, r.t_full, r.ratio, r.touched_docs, r.corpus_m
            ),
        )?;
    }
    emit(out, format_args!("median ratio {median:.4}\n"))
}
