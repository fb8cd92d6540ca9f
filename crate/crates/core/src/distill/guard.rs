use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{goal_pattern, parse_goal, step_condition, template_step, Consequence, GuardLevel, Guardrail, Trigger};
use crate::model::{ExperienceTuple, FailureReason, PlanSpec, INDICATOR_DIM};
use crate::recall::{condition_hash, spatial_hash};
use crate::sim::RecipeGraph;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistillError {
    #[error("empty trajectory")]
    Empty,
    #[error("tuple {0} failed; skills come from successes only")]
    FailedTuple(String),
    #[error("tuple {0} succeeded; guardrails come from failures only")]
    SucceededTuple(String),
    #[error("tuples span several episodes")]
    MixedEpisodes,
    #[error("tuples are not in attempt order")]
    OutOfOrder,
    #[error("failures mix condition signatures")]
    MixedConditions,
}

/// Majority reason; ties go to the higher-priority reason.
pub fn dominant_reason(reasons: impl IntoIterator<Item = FailureReason>) -> Option<FailureReason> {
    let mut counts: BTreeMap<FailureReason, usize> = BTreeMap::new();
    for r in reasons {
        *counts.entry(r).or_default() += 1;
    }
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.priority().cmp(&a.0.priority()))).map(|(r, _)| r)
}

fn consequence_text(reason: FailureReason, n: usize, ind: &[f64; INDICATOR_DIM], cell: Option<u64>) -> String {
    let mut t = format!("{} x{n}", reason.as_str());
    if ind[1] == 0.0 {
        t.push_str(", no inventory progress");
    }
    if ind[5] < 0.0 {
        t.push_str(&format!(", health {:+.1}", ind[5]));
    }
    if let Some(c) = cell {
        t.push_str(&format!(", near cell {c:016x}"));
    }
    t
}

/// Guardrail from the trailing run of consecutive same-condition failures,
/// once that run reaches `k_tol`.
pub fn distill_subgoal_guardrail(
    failures: &[ExperienceTuple],
    k_tol: usize,
) -> Result<Option<Guardrail>, DistillError> {
    let Some(first) = failures.first() else { return Ok(None) };
    if let Some(ok) = failures.iter().find(|t| t.outcome()) {
        return Err(DistillError::SucceededTuple(ok.doc_id.clone()));
    }
    let sig = condition_hash(first.action.task_kind, &first.action.condition);
    if failures.iter().any(|t| condition_hash(t.action.task_kind, &t.action.condition) != sig) {
        return Err(DistillError::MixedConditions);
    }
    if failures.iter().any(|t| t.episode_id != first.episode_id) {
        return Err(DistillError::MixedEpisodes);
    }
    if failures.len() < k_tol.max(1) {
        return Ok(None);
    }
    let reasons = failures.iter().filter_map(|t| t.diagnosis.failure_reason);
    let Some(reason) = dominant_reason(reasons) else { return Ok(None) };

    let cell = if reason.is_spatial() {
        let mut cells: BTreeMap<u64, usize> = BTreeMap::new();
        for t in failures {
            if let Some(c) = spatial_hash(t.s_pre.coords) {
                *cells.entry(c).or_default() += 1;
            }
        }
        cells.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(c, _)| c)
    } else {
        None
    };
    let mut mean = [0.0; INDICATOR_DIM];
    for t in failures {
        for (m, v) in mean.iter_mut().zip(t.diagnosis.indicators) {
            *m += v / failures.len() as f64;
        }
    }
    let trigger = Trigger {
        task_kind: Some(first.action.task_kind),
        failure_reason: Some(reason),
        cond_sig: Some(sig),
        spatial_cell: cell,
        ..Default::default()
    };
    Ok(Some(Guardrail {
        guard_id: Guardrail::id_for(GuardLevel::Subgoal, &trigger),
        level: GuardLevel::Subgoal,
        forbid: Some(first.action.condition.clone()),
        require: None,
        consequence: Consequence {
            reason: Some(reason),
            text: consequence_text(reason, failures.len(), &mean, cell),
            indicators: Some(mean),
        },
        provenance: failures.iter().map(|t| t.doc_id.clone()).collect(),
        hit_count: 0,
        trigger,
        scopes: Default::default(),
    }))
}

/// First prerequisite of `goal_item` (breadth-first, nearest first) that
/// neither the plan produces nor the inventory ever held.
pub fn missing_prerequisite(
    recipes: &RecipeGraph,
    goal_item: &str,
    planned: &BTreeSet<String>,
    held: &BTreeSet<String>,
) -> Option<String> {
    let mut queue = VecDeque::from([goal_item.to_string()]);
    let mut seen = BTreeSet::from([goal_item.to_string()]);
    while let Some(item) = queue.pop_front() {
        for p in recipes.prerequisites(&item) {
            if !seen.insert(p.clone()) {
                continue;
            }
            if !planned.contains(&p) && !held.contains(&p) {
                return Some(p);
            }
            queue.push_back(p);
        }
    }
    None
}

/// Task-level guardrail naming the prerequisite a failed episode lacked.
pub fn distill_task_guardrail(
    episode: &[ExperienceTuple],
    goal: &str,
    plan: &PlanSpec,
    recipes: &RecipeGraph,
) -> Option<Guardrail> {
    let goal_item = parse_goal(goal)?.item;
    let planned: BTreeSet<String> = plan
        .subgoals
        .iter()
        .chain(episode.iter().map(|t| &t.action))
        .filter_map(|s| parse_goal(&s.condition).map(|g| g.item))
        .collect();
    let held: BTreeSet<String> =
        episode.iter().flat_map(|t| t.s_pre.inventory.keys().chain(t.s_post.inventory.keys())).cloned().collect();
    let missing = missing_prerequisite(recipes, &goal_item, &planned, &held)?;
    let trigger = Trigger { goal_pattern: Some(goal_pattern(goal)), ..Default::default() };
    Some(Guardrail {
        guard_id: Guardrail::id_for(GuardLevel::Task, &trigger),
        level: GuardLevel::Task,
        forbid: None,
        require: Some(vec![template_step(recipes, "sg_req", &missing, 1, 30)]),
        consequence: Consequence {
            reason: episode.last().and_then(|t| t.diagnosis.failure_reason),
            text: format!(
                "deadlock: \"{}\" never planned before \"{}\"",
                step_condition(recipes, &missing),
                step_condition(recipes, &goal_item)
            ),
            indicators: None,
        },
        provenance: episode.iter().map(|t| t.doc_id.clone()).collect(),
        hit_count: 0,
        trigger,
        scopes: Default::default(),
    })
}
