use serde::{Deserialize, Serialize};

use crate::controller::{execute_subgoal, ControllerConfig, NavRules};
use crate::diagnosis::{check_holds, compile_checks};
use crate::distill::Skill;
use crate::model::{CheckKind, SubgoalSpec};
use crate::sim::{Block, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub preconditions_met: bool,
    pub success: bool,
    pub steps_run: usize,
    /// First step whose monitor did not hold.
    pub failed_step: Option<String>,
    pub ticks: u64,
}

/// Swap `nearest:<name>` anchors for the closest matching block.
fn resolve_anchors(sg: &SubgoalSpec, world: &World) -> SubgoalSpec {
    let mut sg = sg.clone();
    let me = world.agent.pos;
    for c in sg.checks.iter_mut().filter(|c| c.kind == CheckKind::CoordNear) {
        let Some(name) = c.anchor.as_deref().and_then(|a| a.strip_prefix("nearest:")) else { continue };
        let blocks: Vec<Block> = match Block::from_name(name).or_else(|| Block::from_placeable(name)) {
            Some(b) => vec![b],
            None => Block::sources_of(name).to_vec(),
        };
        let best = blocks
            .iter()
            .flat_map(|b| world.grid.positions_of(*b))
            .min_by_key(|p| (0..3).map(|i| ((p[i] - me[i]) as i64).pow(2)).sum::<i64>());
        if let Some(p) = best {
            c.target = Some([p[0] as f64, p[1] as f64, p[2] as f64]);
            c.anchor = None;
        }
    }
    sg
}

/// Run a skill's steps in order in `world`, one attempt each.
pub fn replay_skill(world: &mut World, skill: &Skill, cfg: &ControllerConfig) -> ReplayOutcome {
    let start = world.tick;
    let snap = world.snapshot("replay");
    let mut out = ReplayOutcome {
        preconditions_met: skill.preconditions.iter().all(|c| check_holds(c, &snap)),
        success: false,
        steps_run: 0,
        failed_step: None,
        ticks: 0,
    };
    if !out.preconditions_met {
        return out;
    }
    let rules = NavRules::default();
    world.mark_attempt();
    for step in &skill.steps {
        let sg = resolve_anchors(step, world);
        let used = world.tick - start;
        let done = match execute_subgoal(world, "replay", &sg, &rules, cfg, cfg.step_budget.saturating_sub(used)) {
            Ok(o) => o.monitor_result,
            Err(_) => false,
        };
        world.mark_attempt();
        out.steps_run += 1;
        if !done {
            out.failed_step = Some(step.subgoal_id.clone());
            break;
        }
    }
    let end = world.snapshot("replay");
    out.success =
        out.failed_step.is_none() && compile_checks(&skill.success_checks).map(|m| m.eval(&end)).unwrap_or(false);
    out.ticks = world.tick - start;
    out
}
