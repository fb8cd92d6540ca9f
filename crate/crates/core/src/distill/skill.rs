use std::collections::BTreeMap;

use super::guard::DistillError;
use super::{parse_goal, Skill};
use crate::model::{inventory_delta, CheckKind, CheckSpec, ExperienceTuple, Mode};

fn slug(goal: &str) -> String {
    goal.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect::<Vec<_>>()
        .join("_")
}

/// Turn a fully successful trajectory into a reusable skill.
pub fn distill_skill(trajectory: &[ExperienceTuple], goal: &str) -> Result<Skill, DistillError> {
    let (first, last) = match (trajectory.first(), trajectory.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(DistillError::Empty),
    };
    if let Some(bad) = trajectory.iter().find(|t| !t.outcome()) {
        return Err(DistillError::FailedTuple(bad.doc_id.clone()));
    }
    if trajectory.iter().any(|t| t.episode_id != first.episode_id) {
        return Err(DistillError::MixedEpisodes);
    }
    if trajectory.windows(2).any(|w| w[1].attempt_index <= w[0].attempt_index) {
        return Err(DistillError::OutOfOrder);
    }

    let net: BTreeMap<String, i64> = inventory_delta(&first.s_pre.inventory, &last.s_post.inventory);
    let mut preconditions: Vec<CheckSpec> = net
        .iter()
        .filter(|(_, d)| **d < 0)
        .filter_map(|(item, d)| {
            let had = first.s_pre.count(item) as i64;
            (had > 0).then(|| CheckSpec::inv_ge(item, had.min(-d)))
        })
        .collect();

    let mut steps = Vec::new();
    for (i, t) in trajectory.iter().enumerate() {
        let mut sg = t.action.clone();
        sg.subgoal_id = format!("sg_{:03}", i + 1);
        let anchor = format!("nearest:{}", sg.target_item().unwrap_or("target"));
        for c in &mut sg.checks {
            if c.kind == CheckKind::CoordNear && c.target.is_some() {
                c.target = None;
                c.anchor = Some(anchor.clone());
            }
        }
        steps.push(sg);
    }
    if let Some(s0) = steps.first() {
        if s0.mode == Mode::Stay {
            if let Some(c) = s0.checks.iter().find(|c| c.kind == CheckKind::CoordNear) {
                preconditions.push(c.clone());
            }
        }
    }

    let item = parse_goal(goal).map(|g| g.item);
    let success_checks = match steps.last() {
        Some(s) if !s.checks.is_empty() => s.checks.clone(),
        _ => item.iter().map(|i| CheckSpec::inv_ge(i, 1)).collect(),
    };
    Ok(Skill {
        name: format!("skill_{}", slug(goal)),
        goal: goal.to_string(),
        preconditions,
        steps,
        success_checks,
        effects: net,
        provenance: trajectory.iter().map(|t| t.doc_id.clone()).collect(),
        use_count: 1,
        success_count: 1,
        scopes: Default::default(),
    })
}
