//! Skills and guardrails distilled from experience, and the knowledge base
//! that holds them.

mod goal;
mod guard;
mod skill;
pub mod yaml;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use goal::{glob_match, goal_pattern, parse_goal, step_condition, step_verb, template_step, Goal};
pub use guard::{
    distill_subgoal_guardrail, distill_task_guardrail, dominant_reason, missing_prerequisite, DistillError,
};
pub use skill::distill_skill;

use crate::model::{CheckSpec, FailureReason, SubgoalSpec, TaskKind, INDICATOR_DIM};
use crate::recall::{fnv1a, normalize_condition};

pub const GLOBAL_SCOPE: &str = "global";

pub fn group_scope(group: &str) -> String {
    format!("group:{group}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skill {
    pub name: String,
    pub goal: String,
    pub preconditions: Vec<CheckSpec>,
    pub steps: Vec<SubgoalSpec>,
    pub success_checks: Vec<CheckSpec>,
    pub effects: std::collections::BTreeMap<String, i64>,
    pub provenance: Vec<String>,
    pub use_count: u32,
    pub success_count: u32,
    #[serde(default)]
    pub scopes: BTreeSet<String>,
}

impl Skill {
    /// Dedup key: goal item, ordered step kinds, normalized conditions.
    pub fn signature(&self) -> String {
        let item = parse_goal(&self.goal).map(|g| g.item).unwrap_or_else(|| self.goal.clone());
        let steps: Vec<String> = self
            .steps
            .iter()
            .map(|s| format!("{}:{}", s.task_kind.as_str(), normalize_condition(&s.condition).join(" ")))
            .collect();
        format!("{item}|{}", steps.join(";"))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.steps.is_empty() {
            return Err(format!("skill {} has no steps", self.name));
        }
        if self.success_count > self.use_count {
            return Err(format!("skill {} has more successes than uses", self.name));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardLevel {
    Task,
    Subgoal,
}

/// Conjunction of context predicates; unset fields match anything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_kind: Option<TaskKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<FailureReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cond_sig: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial_cell: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_pattern: Option<String>,
}

impl Trigger {
    pub fn key(&self) -> String {
        crate::canon::to_line(self).expect("trigger serializes")
    }

    pub fn matches(&self, ctx: &MatchContext) -> bool {
        self.goal_pattern.as_ref().is_none_or(|p| glob_match(p, &ctx.goal))
            && self.task_kind.is_none_or(|k| ctx.task_kinds.contains(&k))
            && self.cond_sig.is_none_or(|s| ctx.cond_sigs.contains(&s))
            && match (self.spatial_cell, ctx.spatial_cell) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
            && match (self.failure_reason, ctx.failure_reason) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
            && self.tags.as_ref().is_none_or(|t| t.is_subset(&ctx.tags))
    }
}

/// Observed penalty behind a guardrail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consequence {
    pub reason: Option<FailureReason>,
    pub text: String,
    /// Mean indicators over the failures that formed the guard.
    pub indicators: Option<[f64; INDICATOR_DIM]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guardrail {
    pub guard_id: String,
    pub level: GuardLevel,
    pub trigger: Trigger,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forbid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub require: Option<Vec<SubgoalSpec>>,
    pub consequence: Consequence,
    pub provenance: Vec<String>,
    pub hit_count: u32,
    #[serde(default)]
    pub scopes: BTreeSet<String>,
}

impl Guardrail {
    pub fn dedup_key(&self) -> String {
        format!("{:?}|{}", self.level, self.trigger.key())
    }

    pub fn id_for(level: GuardLevel, trigger: &Trigger) -> String {
        let h = fnv1a(format!("{level:?}|{}", trigger.key()).as_bytes());
        format!("g_{:012x}", h >> 16)
    }

    pub fn validate(&self) -> Result<(), String> {
        match (self.level, &self.forbid, &self.require) {
            (GuardLevel::Subgoal, Some(_), None) | (GuardLevel::Task, None, Some(_)) => Ok(()),
            _ => Err(format!("guard {} must set exactly the field its level uses", self.guard_id)),
        }
    }

    /// One-line rendering used in prompts and capsules.
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if let Some(p) = &self.trigger.goal_pattern {
            parts.push(format!("goal~\"{p}\""));
        }
        if let Some(k) = self.trigger.task_kind {
            parts.push(format!("kind={}", k.as_str()));
        }
        if let Some(r) = self.trigger.failure_reason {
            parts.push(format!("reason={}", r.as_str()));
        }
        if let Some(c) = self.trigger.spatial_cell {
            parts.push(format!("cell={c:016x}"));
        }
        let action = match (&self.forbid, &self.require) {
            (Some(f), _) => format!("avoid \"{f}\""),
            (_, Some(r)) => {
                let conds: Vec<&str> = r.iter().map(|s| s.condition.as_str()).collect();
                format!("require [{}]", conds.join(", "))
            }
            _ => String::new(),
        };
        format!("{} when {}: {} ({})", self.guard_id, parts.join(" "), action, self.consequence.text)
    }
}

/// What a guardrail trigger is evaluated against.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchContext {
    pub goal: String,
    pub task_kinds: BTreeSet<TaskKind>,
    pub cond_sigs: BTreeSet<u64>,
    pub spatial_cell: Option<u64>,
    pub failure_reason: Option<FailureReason>,
    pub tags: BTreeSet<String>,
}

impl MatchContext {
    pub fn for_goal(goal: &str) -> Self {
        MatchContext { goal: goal.to_string(), ..Default::default() }
    }

    pub fn add_subgoal(&mut self, kind: TaskKind, condition: &str) {
        self.task_kinds.insert(kind);
        self.cond_sigs.insert(crate::recall::condition_hash(kind, condition));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Knowledge {
    Skill(Skill),
    Guardrail(Guardrail),
}

impl Knowledge {
    pub fn id(&self) -> &str {
        match self {
            Knowledge::Skill(s) => &s.name,
            Knowledge::Guardrail(g) => &g.guard_id,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub skills: Vec<Skill>,
    pub guardrails: Vec<Guardrail>,
    pub version: u64,
}

fn merge_ids(into: &mut Vec<String>, from: &[String]) {
    let mut set: BTreeSet<String> = into.drain(..).collect();
    set.extend(from.iter().cloned());
    into.extend(set);
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty() && self.guardrails.is_empty()
    }

    /// Insert or merge `item` under the global scope plus `group` (when given).
    /// Returns the stored id; bumps the version only when something changed.
    pub fn commit(&mut self, item: Knowledge, group: Option<&str>) -> Result<String, String> {
        let mut scopes = BTreeSet::from([GLOBAL_SCOPE.to_string()]);
        if let Some(g) = group {
            scopes.insert(group_scope(g));
        }
        let (id, changed) = match item {
            Knowledge::Skill(mut s) => {
                s.validate()?;
                s.scopes.extend(scopes);
                let sig = s.signature();
                if let Some(cur) = self.skills.iter_mut().find(|k| k.signature() == sig) {
                    let before = cur.clone();
                    cur.use_count += s.use_count;
                    cur.success_count += s.success_count;
                    merge_ids(&mut cur.provenance, &s.provenance);
                    cur.scopes.extend(s.scopes);
                    (cur.name.clone(), *cur != before)
                } else {
                    let base = s.name.clone();
                    let mut n = 2;
                    while self.skills.iter().any(|k| k.name == s.name) {
                        s.name = format!("{base}_{n}");
                        n += 1;
                    }
                    let name = s.name.clone();
                    merge_ids(&mut s.provenance, &[]);
                    self.skills.push(s);
                    (name, true)
                }
            }
            Knowledge::Guardrail(mut g) => {
                g.validate()?;
                g.scopes.extend(scopes);
                let key = g.dedup_key();
                if let Some(cur) = self.guardrails.iter_mut().find(|k| k.dedup_key() == key) {
                    let before = cur.clone();
                    merge_ids(&mut cur.provenance, &g.provenance);
                    cur.hit_count = cur.hit_count.max(g.hit_count);
                    cur.scopes.extend(g.scopes);
                    if let (Some(have), Some(new)) = (&mut cur.require, g.require) {
                        for step in new {
                            if !have.iter().any(|h| h.condition == step.condition) {
                                have.push(step);
                            }
                        }
                    }
                    (cur.guard_id.clone(), *cur != before)
                } else {
                    let id = g.guard_id.clone();
                    merge_ids(&mut g.provenance, &[]);
                    self.guardrails.push(g);
                    (id, true)
                }
            }
        };
        if changed {
            self.version += 1;
        }
        Ok(id)
    }

    pub fn skill(&self, name: &str) -> Option<&Skill> {
        self.skills.iter().find(|s| s.name == name)
    }

    pub fn guardrail(&self, id: &str) -> Option<&Guardrail> {
        self.guardrails.iter().find(|g| g.guard_id == id)
    }

    pub fn skills_in_scope<'a>(&'a self, scope: &'a str) -> impl Iterator<Item = &'a Skill> + 'a {
        self.skills.iter().filter(move |s| s.scopes.contains(scope))
    }

    pub fn guardrails_in_scope<'a>(&'a self, scope: &'a str) -> impl Iterator<Item = &'a Guardrail> + 'a {
        self.guardrails.iter().filter(move |g| g.scopes.contains(scope))
    }

    /// Record that a skill was replayed.
    pub fn note_skill_use(&mut self, name: &str, success: bool) {
        if let Some(s) = self.skills.iter_mut().find(|s| s.name == name) {
            s.use_count += 1;
            if success {
                s.success_count += 1;
            }
            self.version += 1;
        }
    }
}

/// Guardrails whose triggers hold in `ctx`: task level first, then by id.
pub fn match_guardrails<'a>(guards: impl IntoIterator<Item = &'a Guardrail>, ctx: &MatchContext) -> Vec<&'a Guardrail> {
    let mut out: Vec<&Guardrail> = guards.into_iter().filter(|g| g.trigger.matches(ctx)).collect();
    out.sort_by(|a, b| a.level.cmp(&b.level).then_with(|| a.guard_id.cmp(&b.guard_id)));
    out
}
