//! Single-file binary model snapshot.
//!
//! ```text
//! magic[8] | version u32 | saved_at i64 | section* | sha256[32]
//! section = tag u32 | len u64 | payload[len]
//! ```
//!
//! Integers are little-endian fixed width, reals are IEEE-754 binary64 bit
//! patterns. The checksum covers every byte except `saved_at` and the
//! checksum itself, so re-saving an unchanged model changes only the
//! timestamp. Sparse rows are written as `(doc, term, count)` triples in
//! ascending order.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, SnapshotError};
use crate::history::{BugReport, History, LinkTable};
use crate::ingest::ContentHash;
use crate::model::Model;
use crate::preprocess::stoplist;
use crate::ranker::RankParams;
use crate::vsm::{DocEntry, DocId, Row, TermId, Vocabulary, VsmIndex};

pub const MAGIC: [u8; 8] = *b"BUGLOCSN";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 8;
const TIMESTAMP_AT: usize = 12;
const CHECKSUM_LEN: usize = 32;

const TAG_PARAMS: u32 = 1;
const TAG_STOPLIST: u32 = 2;
const TAG_CODE: u32 = 3;
const TAG_REPORT_INDEX: u32 = 4;
const TAG_REPORTS: u32 = 5;
const TAG_LINKS: u32 = 6;

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes(s.as_bytes());
    }
    fn section(&mut self, tag: u32, body: Writer) {
        self.u32(tag);
        self.u64(body.buf.len() as u64);
        self.bytes(&body.buf);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

fn corrupt(msg: impl Into<String>) -> Error {
    SnapshotError::Corrupt(msg.into()).into()
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(SnapshotError::Truncated.into());
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        // Every element occupies at least one byte.
        if n > self.buf.len() as u64 {
            return Err(SnapshotError::Truncated.into());
        }
        Ok(n as usize)
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| corrupt("string is not UTF-8"))
    }
    fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

fn encode_index(index: &VsmIndex) -> Writer {
    let mut w = Writer::default();
    let table = index.vocab().table();
    w.u64(table.len() as u64);
    for slot in table {
        match slot {
            Some(term) => {
                w.u8(1);
                w.str(term);
            }
            None => w.u8(0),
        }
    }
    for &df in index.matrix().df_array() {
        w.u32(df);
    }
    for &idf in index.idf_array() {
        w.f64(idf);
    }
    w.u32(index.matrix().next_doc_id().0);
    w.u64(index.m() as u64);
    for (id, entry) in index.matrix().docs() {
        w.u32(id.0);
        w.str(&entry.path);
        w.u64(entry.total_terms as u64);
        w.bytes(&entry.content_hash.0);
    }
    let nnz: usize = index.matrix().rows().map(|(_, r)| r.len()).sum();
    w.u64(nnz as u64);
    for (doc, row) in index.matrix().rows() {
        for &(term, count) in row {
            w.u32(doc.0);
            w.u32(term.0);
            w.u32(count);
        }
    }
    w
}

fn decode_index(r: &mut Reader) -> Result<VsmIndex> {
    let cap = r.len()?;
    let mut table = Vec::with_capacity(cap);
    for _ in 0..cap {
        table.push(match r.u8()? {
            0 => None,
            1 => Some(r.str()?),
            other => return Err(corrupt(format!("bad vocabulary slot tag {other}"))),
        });
    }
    let vocab = Vocabulary::from_table(table).map_err(corrupt)?;
    let df = (0..cap).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let idf = (0..cap).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let next_doc = r.u32()?;
    let m = r.len()?;
    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let id = DocId(r.u32()?);
        let path = r.str()?;
        let total_terms = r.u64()? as usize;
        let content_hash = ContentHash(r.array()?);
        entries.push((
            id,
            DocEntry {
                path,
                total_terms,
                content_hash,
            },
        ));
    }
    let nnz = r.len()?;
    let mut rows: std::collections::BTreeMap<DocId, Row> = entries
        .iter()
        .map(|(id, _)| (*id, Row::new()))
        .collect();
    let mut last: Option<(u32, u32)> = None;
    for _ in 0..nnz {
        let (doc, term, count) = (r.u32()?, r.u32()?, r.u32()?);
        if last.is_some_and(|l| l >= (doc, term)) {
            return Err(corrupt("row triples not strictly ascending"));
        }
        last = Some((doc, term));
        rows.get_mut(&DocId(doc))
            .ok_or_else(|| corrupt(format!("triple for unknown doc {doc}")))?
            .push((TermId(term), count));
    }
    let docs = entries
        .into_iter()
        .map(|(id, entry)| {
            let row = rows.remove(&id).unwrap_or_default();
            (id, entry, row)
        })
        .collect();
    VsmIndex::from_parts(vocab, df, idf, docs, next_doc).map_err(corrupt)
}

fn encode_reports(history: &History) -> Writer {
    let mut w = Writer::default();
    w.u64(history.len() as u64);
    for report in history.reports() {
        w.str(&report.id);
        w.str(&report.title);
        w.str(&report.description);
        w.i64(report.created_at.timestamp());
        w.u32(report.created_at.timestamp_subsec_nanos());
        let files = report.fixed_files.as_deref().unwrap_or_default();
        w.u64(files.len() as u64);
        for f in files {
            w.str(f);
        }
    }
    w
}

fn decode_reports(r: &mut Reader) -> Result<Vec<BugReport>> {
    let n = r.len()?;
    let mut reports = Vec::with_capacity(n);
    for _ in 0..n {
        let id = r.str()?;
        let title = r.str()?;
        let description = r.str()?;
        let secs = r.i64()?;
        let nanos = r.u32()?;
        let created_at = DateTime::<Utc>::from_timestamp(secs, nanos)
            .ok_or_else(|| corrupt("timestamp out of range"))?;
        let k = r.len()?;
        let files = (0..k).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        reports.push(BugReport {
            id,
            title,
            description,
            fixed_files: Some(files),
            created_at,
        });
    }
    Ok(reports)
}

fn encode_links(links: &LinkTable) -> Writer {
    let mut w = Writer::default();
    w.u64(links.len() as u64);
    for (path, ids) in links.iter() {
        w.str(path);
        w.u64(ids.len() as u64);
        for id in ids {
            w.str(id);
        }
    }
    w
}

fn decode_links(r: &mut Reader) -> Result<Vec<(String, BTreeSet<String>)>> {
    let n = r.len()?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let path = r.str()?;
        let k = r.len()?;
        let ids = (0..k).map(|_| r.str()).collect::<Result<BTreeSet<_>>>()?;
        out.push((path, ids));
    }
    Ok(out)
}

/// Serializes a model to bytes. `saved_at` is seconds since the Unix epoch.
pub fn encode(model: &Model, saved_at: i64) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(&MAGIC);
    w.u32(FORMAT_VERSION);
    w.i64(saved_at);

    let mut params = Writer::default();
    params.f64(model.params.alpha);
    params.u64(model.params.top_k as u64);
    w.section(TAG_PARAMS, params);

    let mut stop = Writer::default();
    stop.bytes(&stoplist::digest());
    w.section(TAG_STOPLIST, stop);

    w.section(TAG_CODE, encode_index(&model.code));
    w.section(TAG_REPORT_INDEX, encode_index(model.history.index()));
    w.section(TAG_REPORTS, encode_reports(&model.history));
    w.section(TAG_LINKS, encode_links(model.history.links()));

    let checksum = checksum(&w.buf);
    w.bytes(&checksum);
    w.buf
}

fn checksum(body: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(&body[..TIMESTAMP_AT]);
    h.update(&body[HEADER_LEN..]);
    h.finalize().into()
}

/// Parses and validates snapshot bytes. Returns the model and `saved_at`.
pub fn decode(bytes: &[u8]) -> Result<(Model, i64)> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(SnapshotError::BadMagic.into());
    }
    if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(SnapshotError::Truncated.into());
    }
    let (body, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if checksum(body) != stored {
        return Err(SnapshotError::ChecksumMismatch.into());
    }
    let mut r = Reader {
        buf: &body[MAGIC.len()..],
    };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(SnapshotError::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        }
        .into());
    }
    let saved_at = r.i64()?;

    let mut sections = std::collections::BTreeMap::new();
    while !r.is_empty() {
        let tag = r.u32()?;
        let len = r.len()?;
        if sections.insert(tag, r.take(len)?).is_some() {
            return Err(corrupt(format!("section {tag} repeated")));
        }
    }
    let mut section = |tag: u32| -> Result<Reader> {
        sections
            .remove(&tag)
            .map(|buf| Reader { buf })
            .ok_or_else(|| corrupt(format!("section {tag} missing")))
    };

    let mut p = section(TAG_PARAMS)?;
    let params = RankParams {
        alpha: p.f64()?,
        top_k: p.u64()? as usize,
    };
    params.validate().map_err(|e| corrupt(e.to_string()))?;

    let mut s = section(TAG_STOPLIST)?;
    if s.array::<32>()? != stoplist::digest() {
        return Err(SnapshotError::IncompatibleStoplist.into());
    }

    let code = decode_index(&mut section(TAG_CODE)?)?;
    let report_index = decode_index(&mut section(TAG_REPORT_INDEX)?)?;
    let reports = decode_reports(&mut section(TAG_REPORTS)?)?;
    let stored_links = decode_links(&mut section(TAG_LINKS)?)?;
    let links = LinkTable::from_reports(&reports);
    let derived: Vec<(String, BTreeSet<String>)> = links
        .iter()
        .map(|(p, ids)| (p.to_string(), ids.clone()))
        .collect();
    if derived != stored_links {
        return Err(corrupt("link section disagrees with stored reports"));
    }
    let history = History::from_parts(reports, report_index, links).map_err(corrupt)?;

    Ok((
        Model {
            code,
            history,
            params,
        },
        saved_at,
    ))
}

/// Writes a snapshot atomically: a temporary file in the same directory is
/// renamed over `path` once fully written.
pub fn save_snapshot(model: &Model, path: &Path) -> Result<()> {
    let bytes = encode(model, Utc::now().timestamp());
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(&bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode(&bytes)?.0)
}
