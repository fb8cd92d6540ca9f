//! Append-only experience documents, their index, and rolled-up summaries.
//!
//! One writer at a time: `append` and `rollup` take `&mut self`, queries take
//! `&self`. Wrap the store in an `RwLock` to share it across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canon;
use crate::model::{ExperienceTuple, FailureReason, ModelError, TaskKind};
use crate::recall::{condition_hash, spatial_hash, zone_label};

pub const DEFAULT_WINDOW: usize = 256;
pub const DOCS_FILE: &str = "experience.jsonl";
pub const INDEX_FILE: &str = "index.jsonl";
pub const SUMMARIES_FILE: &str = "summaries.jsonl";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file} line {line}: {message}")]
    Corrupt { file: String, line: usize, message: String },
    #[error("document `{0}` not found")]
    NotFound(String),
    #[error("query needs at least one filter")]
    EmptyFilter,
    #[error("limit must be positive")]
    ZeroLimit,
    #[error("window must be positive")]
    ZeroWindow,
    #[error(transparent)]
    Invalid(#[from] ModelError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub doc_id: String,
    pub cond_sig: u64,
    pub spatial_cell: u64,
    pub tags: BTreeSet<String>,
    pub timestamp: u64,
    pub outcome: bool,
    pub failure_reason: Option<FailureReason>,
    pub inv_delta_brief: Vec<(String, i64)>,
    pub task_kind: TaskKind,
    pub condition: String,
    pub coords: [f64; 3],
    pub rolled_up: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub summary_id: String,
    pub window_span: (u64, u64),
    pub doc_count: u32,
    pub success_rate: f64,
    pub reason_histogram: BTreeMap<FailureReason, u32>,
    pub tag_histogram: BTreeMap<String, u32>,
    pub spatial_bbox: [[f64; 3]; 2],
    pub net_inv_delta: BTreeMap<String, i64>,
    /// Most common condition signatures, most frequent first (at most five).
    pub frequent_cond_sigs: Vec<u64>,
    pub frequent_conditions: Vec<String>,
    pub doc_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryFilter {
    pub cond_sig: Option<u64>,
    pub spatial_cell: Option<u64>,
    /// Every listed tag must be present.
    pub tags: Option<BTreeSet<String>>,
    pub outcome: Option<bool>,
    pub reason: Option<FailureReason>,
    /// Inclusive timestamp bounds.
    pub time_range: Option<(u64, u64)>,
    /// Also search entries that were rolled up.
    #[serde(default)]
    pub include_rolled_up: bool,
}

impl QueryFilter {
    pub fn is_empty(&self) -> bool {
        self.cond_sig.is_none()
            && self.spatial_cell.is_none()
            && self.tags.is_none()
            && self.outcome.is_none()
            && self.reason.is_none()
            && self.time_range.is_none()
    }

    pub fn matches(&self, e: &IndexEntry) -> bool {
        (self.include_rolled_up || !e.rolled_up)
            && self.cond_sig.is_none_or(|s| e.cond_sig == s)
            && self.spatial_cell.is_none_or(|c| e.spatial_cell == c)
            && self.tags.as_ref().is_none_or(|t| t.is_subset(&e.tags))
            && self.outcome.is_none_or(|o| e.outcome == o)
            && self.reason.is_none_or(|r| e.failure_reason == Some(r))
            && self.time_range.is_none_or(|(a, b)| (a..=b).contains(&e.timestamp))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Meta {
    counter: u64,
    summaries: u64,
    window: usize,
    config_hash: String,
}

pub fn doc_id_for(n: u64) -> String {
    format!("d_{n:06}")
}

fn doc_number(id: &str) -> Option<u64> {
    id.strip_prefix("d_")?.parse().ok()
}

/// Up to three items with the largest absolute change, ties by name.
pub fn inv_delta_brief(delta: &BTreeMap<String, i64>) -> Vec<(String, i64)> {
    let mut v: Vec<(String, i64)> = delta.iter().map(|(k, d)| (k.clone(), *d)).collect();
    v.sort_by(|a, b| b.1.abs().cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
    v.truncate(3);
    v
}

/// Index entry for `e` stamped with `timestamp`.
pub fn build_index_entry(e: &ExperienceTuple, timestamp: u64) -> IndexEntry {
    let mut tags = BTreeSet::new();
    tags.insert(e.action.task_kind.as_str().to_string());
    for c in &e.action.checks {
        if let Some(i) = &c.item {
            tags.insert(i.clone());
        }
    }
    tags.insert(zone_label(e.s_pre.coords));
    IndexEntry {
        doc_id: e.doc_id.clone(),
        cond_sig: condition_hash(e.action.task_kind, &e.action.condition),
        spatial_cell: spatial_hash(e.s_pre.coords).unwrap_or(0),
        tags,
        timestamp,
        outcome: e.diagnosis.outcome,
        failure_reason: e.diagnosis.failure_reason,
        inv_delta_brief: inv_delta_brief(&e.diagnosis.state_diff.inventory),
        task_kind: e.action.task_kind,
        condition: e.action.condition.clone(),
        coords: e.s_pre.coords,
        rolled_up: false,
    }
}

#[derive(Debug)]
pub struct ExperienceStore {
    dir: Option<PathBuf>,
    window: usize,
    docs: Vec<ExperienceTuple>,
    index: Vec<IndexEntry>,
    summaries: Vec<SummaryRecord>,
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let f = File::open(path).map_err(io_err(path))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = canon::from_line(&line).map_err(|e| StoreError::Corrupt {
            file: name.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(v);
    }
    Ok(out)
}

fn write_atomic(path: &Path, body: &str) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, body).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn append_line(path: &Path, line: &str) -> Result<(), StoreError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
    f.write_all(line.as_bytes()).map_err(io_err(path))?;
    f.write_all(b"\n").map_err(io_err(path))
}

fn lines_of<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|i| canon::to_line(i).expect("serializable") + "\n").collect()
}

impl ExperienceStore {
    /// In-memory copy of this store; appends to it never touch disk.
    pub fn detached(&self) -> Self {
        ExperienceStore {
            dir: None,
            window: self.window,
            docs: self.docs.clone(),
            index: self.index.clone(),
            summaries: self.summaries.clone(),
        }
    }

    pub fn in_memory(window: usize) -> Self {
        ExperienceStore { dir: None, window: window.max(1), docs: Vec::new(), index: Vec::new(), summaries: Vec::new() }
    }

    /// Open or create a store directory.
    pub fn open(dir: impl AsRef<Path>, window: usize) -> Result<Self, StoreError> {
        if window == 0 {
            return Err(StoreError::ZeroWindow);
        }
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let docs: Vec<ExperienceTuple> = read_lines(&dir.join(DOCS_FILE))?;
        let mut index: Vec<IndexEntry> = read_lines(&dir.join(INDEX_FILE))?;
        let summaries: Vec<SummaryRecord> = read_lines(&dir.join(SUMMARIES_FILE))?;
        for (i, d) in docs.iter().enumerate() {
            if d.doc_id != doc_id_for(i as u64 + 1) {
                return Err(StoreError::Corrupt {
                    file: DOCS_FILE.into(),
                    line: i + 1,
                    message: format!("expected {}, found {}", doc_id_for(i as u64 + 1), d.doc_id),
                });
            }
        }
        if index.len() > docs.len() {
            return Err(StoreError::Corrupt {
                file: INDEX_FILE.into(),
                line: docs.len() + 1,
                message: "index entry without a document".into(),
            });
        }
        // A crash between the two appends leaves documents without entries.
        let repaired = index.len() < docs.len();
        for (i, d) in docs.iter().enumerate().skip(index.len()) {
            index.push(build_index_entry(d, i as u64 + 1));
        }
        let store = ExperienceStore { dir: Some(dir), window, docs, index, summaries };
        if repaired {
            store.rewrite_index()?;
        }
        store.write_meta()?;
        Ok(store)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn next_doc_id(&self) -> String {
        doc_id_for(self.docs.len() as u64 + 1)
    }

    pub fn config_hash(&self) -> String {
        let h = Sha256::digest(format!("window={}", self.window).as_bytes());
        h.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn write_meta(&self) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let meta = Meta {
            counter: self.docs.len() as u64,
            summaries: self.summaries.len() as u64,
            window: self.window,
            config_hash: self.config_hash(),
        };
        write_atomic(&dir.join(META_FILE), &canon::to_pretty(&meta).expect("meta serializes"))
    }

    fn rewrite_index(&self) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        write_atomic(&dir.join(INDEX_FILE), &lines_of(&self.index))
    }

    /// Persist `e` under a fresh doc id; rolls up when the live index outgrows the window.
    pub fn append(&mut self, mut e: ExperienceTuple) -> Result<String, StoreError> {
        let n = self.docs.len() as u64 + 1;
        e.doc_id = doc_id_for(n);
        e.validate()?;
        let entry = build_index_entry(&e, n);
        if let Some(dir) = &self.dir {
            append_line(&dir.join(DOCS_FILE), &canon::to_line(&e).expect("tuple serializes"))?;
            append_line(&dir.join(INDEX_FILE), &canon::to_line(&entry).expect("entry serializes"))?;
        }
        let id = e.doc_id.clone();
        self.docs.push(e);
        self.index.push(entry);
        if self.live_count() > self.window {
            self.rollup(self.window)?;
        }
        self.write_meta()?;
        Ok(id)
    }

    pub fn get_document(&self, doc_id: &str) -> Result<&ExperienceTuple, StoreError> {
        doc_number(doc_id)
            .and_then(|n| self.docs.get((n as usize).checked_sub(1)?))
            .filter(|d| d.doc_id == doc_id)
            .ok_or_else(|| StoreError::NotFound(doc_id.to_string()))
    }

    pub fn documents(&self) -> &[ExperienceTuple] {
        &self.docs
    }

    pub fn index(&self) -> &[IndexEntry] {
        &self.index
    }

    pub fn live(&self) -> impl Iterator<Item = &IndexEntry> {
        self.index.iter().filter(|e| !e.rolled_up)
    }

    pub fn live_count(&self) -> usize {
        self.live().count()
    }

    pub fn summaries(&self) -> &[SummaryRecord] {
        &self.summaries
    }

    pub fn entry(&self, doc_id: &str) -> Option<&IndexEntry> {
        let n = doc_number(doc_id)? as usize;
        self.index.get(n.checked_sub(1)?).filter(|e| e.doc_id == doc_id)
    }

    /// Matching entries, newest first.
    pub fn query(&self, filter: &QueryFilter, limit: usize) -> Result<Vec<IndexEntry>, StoreError> {
        if filter.is_empty() {
            return Err(StoreError::EmptyFilter);
        }
        if limit == 0 {
            return Err(StoreError::ZeroLimit);
        }
        Ok(self.index.iter().rev().filter(|e| filter.matches(e)).take(limit).cloned().collect())
    }

    /// Fold the oldest live entries into summaries once the live index exceeds `w`.
    pub fn rollup(&mut self, w: usize) -> Result<Vec<SummaryRecord>, StoreError> {
        if w == 0 {
            return Err(StoreError::ZeroWindow);
        }
        let live: Vec<usize> = (0..self.index.len()).filter(|i| !self.index[*i].rolled_up).collect();
        if live.len() <= w {
            return Ok(Vec::new());
        }
        let batch = (w / 2).max(1);
        let excess = live.len() - w;
        let take = (excess.div_ceil(batch) * batch).min(live.len());
        let mut made = Vec::new();
        for chunk in live[..take].chunks(batch) {
            let s = self.summarize(chunk);
            for i in chunk {
                self.index[*i].rolled_up = true;
            }
            made.push(s);
        }
        if let Some(dir) = &self.dir {
            for s in &made {
                append_line(&dir.join(SUMMARIES_FILE), &canon::to_line(s).expect("summary serializes"))?;
            }
        }
        self.summaries.extend(made.iter().cloned());
        self.rewrite_index()?;
        self.write_meta()?;
        Ok(made)
    }

    fn summarize(&self, rows: &[usize]) -> SummaryRecord {
        summarize_entries(self.summaries.len() as u64 + 1, rows.iter().map(|i| (&self.index[*i], &self.docs[*i])))
    }
}

/// Aggregate entries (with their documents) into one summary record.
pub fn summarize_entries<'a>(
    number: u64,
    rows: impl Iterator<Item = (&'a IndexEntry, &'a ExperienceTuple)>,
) -> SummaryRecord {
    let mut first = u64::MAX;
    let mut last = 0;
    let mut count = 0u32;
    let mut ok = 0u32;
    let mut reasons = BTreeMap::new();
    let mut tags = BTreeMap::new();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut net = BTreeMap::new();
    let mut sigs: BTreeMap<u64, (u32, String)> = BTreeMap::new();
    let mut doc_ids = Vec::new();
    for (e, d) in rows {
        first = first.min(e.timestamp);
        last = last.max(e.timestamp);
        count += 1;
        if e.outcome {
            ok += 1;
        }
        if let Some(r) = e.failure_reason {
            *reasons.entry(r).or_insert(0) += 1;
        }
        for t in &e.tags {
            *tags.entry(t.clone()).or_insert(0) += 1;
        }
        for c in [d.s_pre.coords, d.s_post.coords] {
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        for (k, v) in &d.diagnosis.state_diff.inventory {
            *net.entry(k.clone()).or_insert(0i64) += v;
        }
        sigs.entry(e.cond_sig).or_insert((0, e.condition.clone())).0 += 1;
        doc_ids.push(e.doc_id.clone());
    }
    net.retain(|_, v| *v != 0);
    let mut ranked: Vec<(u64, u32, String)> = sigs.into_iter().map(|(s, (n, c))| (s, n, c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(5);
    SummaryRecord {
        summary_id: format!("s_{number:06}"),
        window_span: (first, last),
        doc_count: count,
        success_rate: if count == 0 { 0.0 } else { ok as f64 / count as f64 },
        reason_histogram: reasons,
        tag_histogram: tags,
        spatial_bbox: [lo, hi],
        net_inv_delta: net,
        frequent_cond_sigs: ranked.iter().map(|r| r.0).collect(),
        frequent_conditions: ranked.into_iter().map(|r| r.2).collect(),
        doc_ids,
    }
}
