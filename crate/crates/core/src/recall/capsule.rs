use serde::{Deserialize, Serialize};

use super::{condition_hash, cosine, encode_dim, CELL_SIZE, DIM};
use crate::diagnosis::check_holds;
use crate::distill::{match_guardrails, Guardrail, KnowledgeBase, MatchContext, Skill};
use crate::model::{Inventory, StateSnapshot, TaskKind};
use crate::store::{ExperienceStore, IndexEntry, SummaryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecallConfig {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub dim: usize,
    pub cell_size: f64,
    pub summary_floor: f64,
}

impl Default for RecallConfig {
    fn default() -> Self {
        RecallConfig { alpha: 0.7, beta: 0.3, k: 8, dim: DIM, cell_size: CELL_SIZE, summary_floor: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallContext {
    pub goal: String,
    pub zone: String,
    pub held: Option<String>,
    pub pending: Vec<String>,
    pub coords: [f64; 3],
    pub inventory: Inventory,
    /// Kind of the first pending step; inferred from its text when absent.
    #[serde(default)]
    pub task_kind: Option<TaskKind>,
}

impl RecallContext {
    pub fn from_snapshot(goal: &str, s: &StateSnapshot, pending: Vec<String>) -> Self {
        RecallContext {
            goal: goal.to_string(),
            zone: super::zone_label(s.coords),
            held: s.equipped.clone(),
            pending,
            coords: s.coords,
            inventory: s.inventory.clone(),
            task_kind: None,
        }
    }

    fn focus(&self) -> &str {
        self.pending.first().map(String::as_str).unwrap_or(&self.goal)
    }

    pub fn kind(&self) -> TaskKind {
        self.task_kind.unwrap_or_else(|| TaskKind::infer(self.focus()))
    }

    pub fn cond_sig(&self) -> u64 {
        condition_hash(self.kind(), self.focus())
    }

    pub fn render(&self) -> String {
        let mut parts = vec![self.goal.clone(), self.zone.clone()];
        parts.extend(self.held.iter().cloned());
        parts.extend(self.pending.iter().cloned());
        parts.extend(self.inventory.keys().cloned());
        parts.join(" ")
    }

    pub fn match_context(&self) -> MatchContext {
        let mut m = MatchContext::for_goal(&self.goal);
        for p in &self.pending {
            m.add_subgoal(TaskKind::infer(p), p);
        }
        m.add_subgoal(self.kind(), self.focus());
        m
    }
}

pub fn render_entry(e: &IndexEntry) -> String {
    let mut parts = vec![e.task_kind.as_str().to_string(), e.condition.clone()];
    parts.push(e.failure_reason.map(|r| r.as_str().to_string()).unwrap_or_else(|| "success".into()));
    parts.extend(e.tags.iter().cloned());
    parts.extend(e.inv_delta_brief.iter().map(|(k, _)| k.clone()));
    parts.join(" ")
}

pub fn render_summary(s: &SummaryRecord) -> String {
    let mut parts: Vec<String> = s.frequent_conditions.clone();
    parts.extend(s.reason_histogram.keys().map(|r| r.as_str().to_string()));
    parts.extend(s.tag_histogram.keys().cloned());
    parts.extend(s.net_inv_delta.keys().cloned());
    parts.join(" ")
}

/// A scored item from either store layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Candidate<'a> {
    Entry(&'a IndexEntry),
    Summary(&'a SummaryRecord),
}

impl Candidate<'_> {
    pub fn id(&self) -> &str {
        match self {
            Candidate::Entry(e) => &e.doc_id,
            Candidate::Summary(s) => &s.summary_id,
        }
    }

    pub fn timestamp(&self) -> u64 {
        match self {
            Candidate::Entry(e) => e.timestamp,
            Candidate::Summary(s) => s.window_span.1,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Candidate::Entry(e) => render_entry(e),
            Candidate::Summary(s) => render_summary(s),
        }
    }

    fn sig_match(&self, sig: u64) -> bool {
        match self {
            Candidate::Entry(e) => e.cond_sig == sig,
            Candidate::Summary(s) => s.frequent_cond_sigs.contains(&sig),
        }
    }
}

/// Relevance: weighted cosine of renderings plus an exact condition-hash bonus.
pub fn score(ctx: &RecallContext, c: &Candidate, cfg: &RecallConfig) -> f64 {
    score_with(&encode_dim(&ctx.render(), cfg.dim), ctx.cond_sig(), c, cfg)
}

fn score_with(ctx_vec: &[f64], sig: u64, c: &Candidate, cfg: &RecallConfig) -> f64 {
    let cos = cosine(ctx_vec, &encode_dim(&c.render(), cfg.dim));
    cfg.alpha * cos + cfg.beta * if c.sig_match(sig) { 1.0 } else { 0.0 }
}

/// Descending score, then newer, then smaller id.
fn rank(a: &(f64, Candidate), b: &(f64, Candidate)) -> std::cmp::Ordering {
    b.0.total_cmp(&a.0).then(b.1.timestamp().cmp(&a.1.timestamp())).then_with(|| a.1.id().cmp(b.1.id()))
}

/// Top-K candidates over summaries and live entries.
///
/// Summaries under the floor are pruned only when at least K candidates clear
/// it, so pruning never changes the result.
pub fn select_memory_block<'a>(
    ctx: &RecallContext,
    store: &'a ExperienceStore,
    cfg: &RecallConfig,
) -> Vec<(f64, Candidate<'a>)> {
    let k = cfg.k.max(1);
    let v = encode_dim(&ctx.render(), cfg.dim);
    let sig = ctx.cond_sig();
    let summaries: Vec<(f64, Candidate)> = store
        .summaries()
        .iter()
        .map(|s| {
            let c = Candidate::Summary(s);
            (score_with(&v, sig, &c, cfg), c)
        })
        .collect();
    let mut pool: Vec<(f64, Candidate)> = store
        .live()
        .map(|e| {
            let c = Candidate::Entry(e);
            (score_with(&v, sig, &c, cfg), c)
        })
        .collect();
    let above = pool.iter().chain(&summaries).filter(|(s, _)| *s >= cfg.summary_floor).count();
    if above >= k {
        pool.extend(summaries.into_iter().filter(|(s, _)| *s >= cfg.summary_floor));
    } else {
        pool.extend(summaries);
    }
    pool.sort_by(rank);
    pool.truncate(k);
    pool
}

/// Reference ranking over every candidate with no pruning.
pub fn full_scan_topk<'a>(
    ctx: &RecallContext,
    store: &'a ExperienceStore,
    cfg: &RecallConfig,
) -> Vec<(f64, Candidate<'a>)> {
    let mut all: Vec<(f64, Candidate)> = store
        .summaries()
        .iter()
        .map(Candidate::Summary)
        .chain(store.live().map(Candidate::Entry))
        .map(|c| (score(ctx, &c, cfg), c))
        .collect();
    all.sort_by(rank);
    all.truncate(cfg.k.max(1));
    all
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapsuleItem {
    pub k: String,
    pub v: String,
    pub src: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryCapsule {
    pub facts: Vec<CapsuleItem>,
    pub constraints: Vec<CapsuleItem>,
    pub next_actions: Vec<String>,
    pub supporting_skills: Vec<String>,
    pub supporting_failures: Vec<String>,
}

impl MemoryCapsule {
    pub fn is_empty(&self) -> bool {
        self.facts.is_empty() && self.constraints.is_empty() && self.next_actions.is_empty()
    }
}

fn fact_for(c: &Candidate) -> CapsuleItem {
    match c {
        Candidate::Entry(e) => {
            let delta: Vec<String> = e.inv_delta_brief.iter().map(|(k, d)| format!("{k}:{d:+}")).collect();
            let status = e.failure_reason.map(|r| r.as_str()).unwrap_or("ok");
            CapsuleItem { k: e.condition.clone(), v: format!("{status} [{}]", delta.join(",")), src: e.doc_id.clone() }
        }
        Candidate::Summary(s) => {
            let top = s
                .reason_histogram
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.priority().cmp(&a.0.priority())))
                .map(|(r, _)| r.as_str())
                .unwrap_or("none");
            CapsuleItem {
                k: format!("summary {}", s.frequent_conditions.first().cloned().unwrap_or_default()),
                v: format!("success_rate={:.2} n={} top_reason={top}", s.success_rate, s.doc_count),
                src: s.doc_ids.last().cloned().unwrap_or_else(|| "diagnosis".into()),
            }
        }
    }
}

/// Constraint key a guardrail contributes to capsules and plans.
pub fn constraint_key(g: &Guardrail) -> String {
    use crate::model::FailureReason as R;
    match (g.consequence.reason.or(g.trigger.failure_reason), &g.require, g.trigger.spatial_cell) {
        (_, Some(req), _) => {
            format!("require_{}", req.iter().map(|s| s.condition.replace(' ', "_")).collect::<Vec<_>>().join("+"))
        }
        (Some(r), _, _) if r.is_hazard() => "avoid_hazard".into(),
        (Some(R::NavStuck | R::NavOscillate | R::PathUnreachable), _, Some(cell)) => format!("avoid_cell_{cell:016x}"),
        _ => format!("avoid_{}", g.forbid.as_deref().unwrap_or("pattern").replace(' ', "_")),
    }
}

fn best_skill<'a>(ctx: &RecallContext, skills: &'a [Skill], cfg: &RecallConfig) -> Option<&'a Skill> {
    let v = encode_dim(&ctx.render(), cfg.dim);
    skills
        .iter()
        .map(|s| {
            let text = std::iter::once(s.goal.clone()).chain(s.steps.iter().map(|st| st.condition.clone()));
            (cosine(&v, &encode_dim(&text.collect::<Vec<_>>().join(" "), cfg.dim)), s)
        })
        .filter(|(c, _)| *c > 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.name.cmp(&a.1.name)))
        .map(|(_, s)| s)
}

/// Build the memory capsule for `ctx`.
pub fn recall_topk(
    ctx: &RecallContext,
    store: &ExperienceStore,
    kb: &KnowledgeBase,
    cfg: &RecallConfig,
) -> MemoryCapsule {
    let block = select_memory_block(ctx, store, cfg);
    let facts = block.iter().map(|(_, c)| fact_for(c)).collect();
    let guards = match_guardrails(&kb.guardrails, &ctx.match_context());
    let mut constraints: Vec<CapsuleItem> = Vec::new();
    for g in &guards {
        let k = constraint_key(g);
        if constraints.iter().any(|c| c.k == k) {
            continue;
        }
        constraints.push(CapsuleItem {
            k,
            v: "true".into(),
            src: g.provenance.last().cloned().unwrap_or_else(|| "diagnosis".into()),
        });
    }
    let mut snapshot = StateSnapshot::empty("recall");
    snapshot.inventory = ctx.inventory.clone();
    snapshot.coords = ctx.coords;
    snapshot.equipped = ctx.held.clone();
    let skill = best_skill(ctx, &kb.skills, cfg);
    let next_actions = skill
        .and_then(|s| s.steps.iter().find(|st| !st.checks.iter().all(|c| check_holds(c, &snapshot))))
        .map(|st| vec![st.condition.clone()])
        .unwrap_or_default();
    MemoryCapsule {
        facts,
        constraints,
        next_actions,
        supporting_skills: skill.map(|s| vec![s.name.clone()]).unwrap_or_default(),
        supporting_failures: guards.iter().map(|g| g.guard_id.clone()).collect(),
    }
}
