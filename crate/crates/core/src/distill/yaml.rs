//! `skills.yaml` / `failures.yaml` card files.
//!
//! Cards carry the human-facing fields; the optional structured fields let a
//! card round-trip exactly. Cards without them (for example from an external
//! distiller) are ingested with inferred defaults.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{parse_goal, Consequence, GuardLevel, Guardrail, KnowledgeBase, Skill, Trigger};
use crate::model::{CheckSpec, ExecutorHint, FailureReason, Mode, SubgoalSpec, TaskKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillCard {
    pub name: String,
    pub goal: String,
    #[serde(default)]
    pub preconditions: Vec<String>,
    pub steps: Vec<String>,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub failure_modes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_specs: Option<Vec<SubgoalSpec>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub effects: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
    #[serde(default)]
    pub use_count: u32,
    #[serde(default)]
    pub success_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureCard {
    #[serde(default)]
    pub id: Option<String>,
    pub symptom: String,
    #[serde(default)]
    pub root_cause: String,
    #[serde(default)]
    pub guardrail: Vec<String>,
    #[serde(default)]
    pub recovery: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<GuardLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<Trigger>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forbid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub require: Option<Vec<SubgoalSpec>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CardError {
    #[error("yaml: {0}")]
    Yaml(#[from] serde_yaml::Error),
    #[error("card {index}: {message}")]
    Invalid { index: usize, message: String },
}

pub fn root_cause(reason: FailureReason) -> &'static str {
    match reason {
        FailureReason::EnvTerminated => "agent died in the environment",
        FailureReason::RiskAbort => "health dropped to the risk threshold",
        FailureReason::ActionInvalid => "executor issued an action the world rejected",
        FailureReason::ToolMissing => "a required tool or input was not in the inventory",
        FailureReason::GuiBlocked => "gui kept opening and closing with no item change",
        FailureReason::NavStuck => "agent stood still with no inventory change",
        FailureReason::NavOscillate => "agent paced back and forth without getting anywhere",
        FailureReason::PathUnreachable => "target position was never reached",
        FailureReason::MonitorNeverTrue => "success checks never held",
        FailureReason::Timeout => "checks held briefly but the budget ran out",
        FailureReason::Unknown => "no specific cause identified",
    }
}

pub fn recovery(reason: FailureReason) -> &'static str {
    match reason {
        FailureReason::EnvTerminated | FailureReason::RiskAbort => "keep clear of lava before acting",
        FailureReason::ActionInvalid => "replan with valid actions",
        FailureReason::ToolMissing => "obtain the missing prerequisite first",
        FailureReason::GuiBlocked => "close the gui and supply the missing inputs",
        FailureReason::NavStuck | FailureReason::NavOscillate | FailureReason::PathUnreachable => {
            "relocate and approach from another cell"
        }
        FailureReason::MonitorNeverTrue | FailureReason::Timeout => "allow a longer budget",
        FailureReason::Unknown => "retry after replanning",
    }
}

pub fn skill_card(s: &Skill, kb: &KnowledgeBase) -> SkillCard {
    let sigs: BTreeSet<u64> =
        s.steps.iter().map(|st| crate::recall::condition_hash(st.task_kind, &st.condition)).collect();
    let failure_modes = kb
        .guardrails
        .iter()
        .filter(|g| g.trigger.cond_sig.is_some_and(|c| sigs.contains(&c)))
        .map(|g| g.consequence.text.clone())
        .collect();
    SkillCard {
        name: s.name.clone(),
        goal: s.goal.clone(),
        preconditions: s.preconditions.iter().map(|c| c.to_compact()).collect(),
        steps: s.steps.iter().map(|st| st.condition.clone()).collect(),
        checks: s.success_checks.iter().map(|c| c.to_compact()).collect(),
        failure_modes,
        step_specs: Some(s.steps.clone()),
        effects: s.effects.clone(),
        provenance: s.provenance.clone(),
        use_count: s.use_count,
        success_count: s.success_count,
    }
}

pub fn failure_card(g: &Guardrail) -> FailureCard {
    let reason = g.consequence.reason;
    let mut guardrail = Vec::new();
    if let Some(f) = &g.forbid {
        guardrail.push(format!("avoid \"{f}\""));
    }
    if let Some(r) = &g.require {
        guardrail.extend(r.iter().map(|s| format!("first \"{}\"", s.condition)));
    }
    FailureCard {
        id: Some(g.guard_id.clone()),
        symptom: g.consequence.text.clone(),
        root_cause: reason.map(root_cause).unwrap_or("missing prerequisite in the plan").to_string(),
        guardrail,
        recovery: vec![reason.map(recovery).unwrap_or("insert the required step before the goal").to_string()],
        level: Some(g.level),
        trigger: Some(g.trigger.clone()),
        forbid: g.forbid.clone(),
        require: g.require.clone(),
        provenance: g.provenance.clone(),
    }
}

pub fn skills_to_yaml(kb: &KnowledgeBase) -> String {
    let cards: Vec<SkillCard> = kb.skills.iter().map(|s| skill_card(s, kb)).collect();
    serde_yaml::to_string(&cards).expect("cards serialize")
}

pub fn failures_to_yaml(kb: &KnowledgeBase) -> String {
    let cards: Vec<FailureCard> = kb.guardrails.iter().map(failure_card).collect();
    serde_yaml::to_string(&cards).expect("cards serialize")
}

fn step_from_text(i: usize, text: &str) -> SubgoalSpec {
    let kind = TaskKind::infer(text);
    let (hint, mode) = match kind {
        TaskKind::Craft => (ExecutorHint::CraftStation, Mode::Stay),
        TaskKind::Wait => (ExecutorHint::Wait, Mode::Stay),
        _ => (ExecutorHint::Default, Mode::Move),
    };
    SubgoalSpec {
        subgoal_id: format!("sg_{:03}", i + 1),
        condition: text.split_whitespace().take(crate::model::MAX_CONDITION_TOKENS).collect::<Vec<_>>().join(" "),
        timeout_s: 60,
        task_kind: kind,
        executor_hint: hint,
        mode,
        checks: parse_goal(text).map(|g| vec![CheckSpec::inv_ge(&g.item, 1)]).unwrap_or_default(),
    }
}

/// Parse skill cards; free-text preconditions that are not compact checks are dropped.
pub fn skills_from_yaml(text: &str) -> Result<Vec<Skill>, CardError> {
    let cards: Vec<SkillCard> = serde_yaml::from_str(text)?;
    let mut out = Vec::new();
    for (index, c) in cards.into_iter().enumerate() {
        let invalid = |message: String| CardError::Invalid { index, message };
        let steps = match c.step_specs {
            Some(s) => s,
            None => c.steps.iter().enumerate().map(|(i, t)| step_from_text(i, t)).collect(),
        };
        for (i, s) in steps.iter().enumerate() {
            s.validate(&format!("steps[{i}]")).map_err(|e| invalid(e.to_string()))?;
        }
        let success_checks = c
            .checks
            .iter()
            .map(|t| CheckSpec::parse_compact(t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(e.to_string()))?;
        let skill = Skill {
            name: c.name,
            goal: c.goal,
            preconditions: c.preconditions.iter().filter_map(|t| CheckSpec::parse_compact(t).ok()).collect(),
            steps,
            success_checks,
            effects: c.effects,
            provenance: c.provenance,
            use_count: c.use_count,
            success_count: c.success_count.min(c.use_count),
            scopes: Default::default(),
        };
        skill.validate().map_err(invalid)?;
        out.push(skill);
    }
    Ok(out)
}

/// Parse failure cards. Cards without a level or trigger become subgoal
/// guards that forbid their first guardrail line.
pub fn failures_from_yaml(text: &str) -> Result<Vec<Guardrail>, CardError> {
    let cards: Vec<FailureCard> = serde_yaml::from_str(text)?;
    let mut out = Vec::new();
    for (index, c) in cards.into_iter().enumerate() {
        let level = c.level.unwrap_or(if c.require.is_some() { GuardLevel::Task } else { GuardLevel::Subgoal });
        let trigger = c.trigger.unwrap_or_default();
        let reason = trigger.failure_reason;
        let (forbid, require) = match level {
            GuardLevel::Subgoal => {
                (c.forbid.or_else(|| c.guardrail.first().cloned()).or(Some(c.symptom.clone())), None)
            }
            GuardLevel::Task => (None, Some(c.require.unwrap_or_default())),
        };
        let g = Guardrail {
            guard_id: c.id.unwrap_or_else(|| Guardrail::id_for(level, &trigger)),
            level,
            trigger,
            forbid,
            require,
            consequence: Consequence { reason, text: c.symptom, indicators: None },
            provenance: c.provenance,
            hit_count: 0,
            scopes: Default::default(),
        };
        g.validate().map_err(|message| CardError::Invalid { index, message })?;
        out.push(g);
    }
    Ok(out)
}
