use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{Ablation, Strategy};
use crate::controller::EpisodeResult;
use crate::distill::KnowledgeBase;
use crate::model::FailureReason;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub runs: u32,
    pub successes: u32,
    pub sr: f64,
}

impl Rate {
    pub fn add(&mut self, success: bool) {
        self.runs += 1;
        self.successes += success as u32;
        self.sr = self.successes as f64 / self.runs as f64;
    }

    pub fn of<'a>(it: impl IntoIterator<Item = &'a EpisodeRow>) -> Rate {
        let mut r = Rate::default();
        for e in it {
            r.add(e.success);
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub index: usize,
    pub episode_id: String,
    pub task: String,
    pub group: String,
    pub phase: String,
    pub seed: u64,
    pub success: bool,
    pub attempts: u32,
    pub replans: u32,
    pub steps: u64,
    pub deadlock: bool,
    pub last_reason: Option<FailureReason>,
    pub skill_used: Option<String>,
    pub committed: Vec<String>,
    pub kb_version: u64,
    pub error: Option<String>,
}

impl EpisodeRow {
    pub fn new(index: usize, task: &str, group: &str, phase: &str, r: &EpisodeResult, kb_version: u64) -> Self {
        EpisodeRow {
            index,
            episode_id: r.episode_id.clone(),
            task: task.to_string(),
            group: group.to_string(),
            phase: phase.to_string(),
            seed: r.seed,
            success: r.success,
            attempts: r.attempts,
            replans: r.replans,
            steps: r.steps,
            deadlock: r.deadlock,
            last_reason: r.last_reason,
            skill_used: r.skill_used.clone(),
            committed: r.committed.clone(),
            kb_version,
            error: r.error.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KbSummary {
    pub skills: usize,
    pub guardrails: usize,
    pub version: u64,
}

impl KbSummary {
    pub fn of(kb: &KnowledgeBase) -> Self {
        KbSummary { skills: kb.skills.len(), guardrails: kb.guardrails.len(), version: kb.version }
    }
}

/// Frozen-knowledge evaluation on held-out seeds partway through training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub percent: u32,
    pub after_episodes: usize,
    /// Training success so far.
    pub train: Rate,
    pub heldout: Rate,
    pub heldout_per_task: BTreeMap<String, Rate>,
    pub kb: KbSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub strategy: Strategy,
    pub ablations: BTreeSet<Ablation>,
    /// Digest of the canonical run config.
    pub config_digest: String,
    pub overall: Rate,
    pub per_task: BTreeMap<String, Rate>,
    pub per_group: BTreeMap<String, Rate>,
    pub per_phase: BTreeMap<String, Rate>,
    pub mean_replans: f64,
    pub total_replans: u64,
    /// Knowledge version after each episode.
    pub kb_growth: Vec<u64>,
    pub kb_start: KbSummary,
    pub kb_final: KbSummary,
    pub store_documents: usize,
    pub checkpoints: Vec<Checkpoint>,
    pub episodes: Vec<EpisodeRow>,
}

impl Report {
    pub fn build(
        strategy: Strategy,
        ablations: BTreeSet<Ablation>,
        config_digest: String,
        episodes: Vec<EpisodeRow>,
        checkpoints: Vec<Checkpoint>,
        kb_start: KbSummary,
        kb_final: KbSummary,
        store_documents: usize,
    ) -> Self {
        let mut per_task: BTreeMap<String, Rate> = BTreeMap::new();
        let mut per_group: BTreeMap<String, Rate> = BTreeMap::new();
        let mut per_phase: BTreeMap<String, Rate> = BTreeMap::new();
        for e in &episodes {
            per_task.entry(e.task.clone()).or_default().add(e.success);
            per_group.entry(e.group.clone()).or_default().add(e.success);
            per_phase.entry(e.phase.clone()).or_default().add(e.success);
        }
        let total_replans: u64 = episodes.iter().map(|e| e.replans as u64).sum();
        Report {
            strategy,
            ablations,
            config_digest,
            overall: Rate::of(&episodes),
            per_task,
            per_group,
            per_phase,
            mean_replans: if episodes.is_empty() { 0.0 } else { total_replans as f64 / episodes.len() as f64 },
            total_replans,
            kb_growth: episodes.iter().map(|e| e.kb_version).collect(),
            kb_start,
            kb_final,
            store_documents,
            checkpoints,
            episodes,
        }
    }

    /// Success rate over the last `n` training episodes.
    pub fn tail_rate(&self, n: usize) -> Rate {
        Rate::of(&self.episodes[self.episodes.len().saturating_sub(n)..])
    }

    pub fn to_json(&self) -> String {
        crate::canon::to_pretty(self).expect("report serializes")
    }
}

fn pct(r: &Rate) -> String {
    format!("{:5.1}%  ({}/{})", r.sr * 100.0, r.successes, r.runs)
}

/// Plain-text summary table.
pub fn render_table(r: &Report) -> String {
    let mut s = String::new();
    let abl: Vec<String> = r.ablations.iter().map(|a| format!("{a:?}")).collect();
    let _ = writeln!(s, "strategy   {:?}", r.strategy);
    let _ = writeln!(s, "ablations  {}", if abl.is_empty() { "none".to_string() } else { abl.join(", ") });
    let _ = writeln!(s, "config     {}", r.config_digest);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<24} success", "task");
    for (k, v) in &r.per_task {
        let _ = writeln!(s, "{k:<24} {}", pct(v));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<24} success", "group");
    for (k, v) in &r.per_group {
        let _ = writeln!(s, "{k:<24} {}", pct(v));
    }
    if r.per_phase.len() > 1 {
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<24} success", "phase");
        for (k, v) in &r.per_phase {
            let _ = writeln!(s, "{k:<24} {}", pct(v));
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<24} {}", "overall", pct(&r.overall));
    let _ = writeln!(s, "{:<24} {:.2} ({} total)", "replans/episode", r.mean_replans, r.total_replans);
    let _ = writeln!(
        s,
        "{:<24} v{} -> v{}  skills {}  guardrails {}",
        "knowledge", r.kb_start.version, r.kb_final.version, r.kb_final.skills, r.kb_final.guardrails
    );
    let _ = writeln!(s, "{:<24} {}", "store documents", r.store_documents);
    if !r.checkpoints.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>4} {:>9}  {:<20} {:<20} kb", "pct", "episodes", "train", "held-out");
        for c in &r.checkpoints {
            let _ = writeln!(
                s,
                "{:>3}% {:>9}  {:<20} {:<20} v{}",
                c.percent,
                c.after_episodes,
                pct(&c.train),
                pct(&c.heldout),
                c.kb.version
            );
        }
    }
    s
}
