use super::stagnation::{detect_stagnation, window_stats, StagnationConfig};
use super::AttemptTrace;
use crate::model::{CheckKind, FailureReason, Inventory, Mode, SubgoalSpec, TaskKind};
use crate::sim::{RecipeGraph, Station, ToolTier};

/// Open/close counts taken from gui_open transitions along the trace.
pub fn gui_transitions(trace: &AttemptTrace) -> (u32, u32) {
    let mut open = 0;
    let mut close = 0;
    for w in trace.steps.windows(2) {
        match (w[0].gui_open, w[1].gui_open) {
            (false, true) => open += 1,
            (true, false) => close += 1,
            _ => {}
        }
    }
    (open, close)
}

fn never_near(trace: &AttemptTrace, sg: &SubgoalSpec) -> bool {
    let targets: Vec<_> = sg
        .checks
        .iter()
        .filter(|c| c.kind == CheckKind::CoordNear)
        .filter_map(|c| Some((c.target?, c.radius?)))
        .collect();
    if targets.is_empty() {
        return false;
    }
    trace.steps.iter().all(|s| {
        targets.iter().all(|(t, r)| {
            let d = ((s.coords[0] - t[0]).powi(2) + (s.coords[1] - t[1]).powi(2) + (s.coords[2] - t[2]).powi(2)).sqrt();
            d > *r
        })
    })
}

/// Pick exactly one reason for a failed attempt, by fixed priority.
pub fn classify_failure(
    trace: &AttemptTrace,
    subgoal: &SubgoalSpec,
    monitor_ever_true: bool,
    timed_out: bool,
    cfg: &StagnationConfig,
) -> FailureReason {
    if trace.env_terminated {
        return FailureReason::EnvTerminated;
    }
    if trace.risk_abort {
        return FailureReason::RiskAbort;
    }
    if trace.action_rejected {
        return FailureReason::ActionInvalid;
    }
    if trace.missing_requirement.is_some() {
        return FailureReason::ToolMissing;
    }
    let (open, close) = gui_transitions(trace);
    if open.min(close) >= cfg.gui_cycles && trace.net_inventory_l1() == 0 {
        return FailureReason::GuiBlocked;
    }
    if subgoal.mode == Mode::Move && detect_stagnation(trace, cfg).unwrap_or(false) {
        let w = window_stats(trace, cfg.window_k, cfg.still_step);
        if w.still_share >= cfg.still_share {
            return FailureReason::NavStuck;
        }
        if w.net_displacement < cfg.oscillation_net_disp {
            return FailureReason::NavOscillate;
        }
    }
    if timed_out && never_near(trace, subgoal) {
        return FailureReason::PathUnreachable;
    }
    if !monitor_ever_true {
        return FailureReason::MonitorNeverTrue;
    }
    if timed_out {
        return FailureReason::Timeout;
    }
    FailureReason::Unknown
}

/// First item or tool the subgoal needs that the agent lacks.
///
/// `station_nearby` reports whether a placed station is usable without
/// carrying one.
pub fn missing_requirement(
    subgoal: &SubgoalSpec,
    inventory: &Inventory,
    recipes: &RecipeGraph,
    station_nearby: impl Fn(Station) -> bool,
) -> Option<String> {
    let target = subgoal.target_item()?;
    let has = |item: &str, n: u32| inventory.get(item).copied().unwrap_or(0) >= n;
    match subgoal.task_kind {
        TaskKind::Mine => {
            let need = recipes.mining_tier(target)?;
            let best = inventory.keys().map(|k| ToolTier::of_item(Some(k))).max().unwrap_or(ToolTier::Hand);
            if best < need {
                need.tool_item().map(String::from)
            } else {
                None
            }
        }
        TaskKind::Craft | TaskKind::Use => {
            let r = recipes.recipe_for(target)?;
            if let Some(st) = r.station.item() {
                if !has(st, 1) && !station_nearby(r.station) {
                    return Some(st.to_string());
                }
            }
            if let Some(f) = &r.fuel {
                if !has(f, 1) {
                    return Some(f.clone());
                }
            }
            r.inputs.iter().find(|(k, n)| !has(k, **n)).map(|(k, _)| k.clone())
        }
        TaskKind::Combat | TaskKind::Wait => None,
    }
}
