//! Attempt diagnosis: monitors, stagnation, failure reasons, indicators.

mod classify;
mod monitor;
mod stagnation;

use serde::{Deserialize, Serialize};

pub use classify::{classify_failure, gui_transitions, missing_requirement};
pub use monitor::{check_holds, compile_checks, Monitor};
pub use stagnation::{detect_stagnation, window_stats, NotEnoughData, StagnationConfig, WindowStats};

use crate::model::{
    compute_state_diff, inventory_delta, DiagnosisRecord, Inventory, ModelError, StateSnapshot, SubgoalSpec,
    INDICATOR_DIM,
};
use crate::sim::StepRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub coords: [f64; 3],
    pub inventory: Inventory,
    pub gui_open: bool,
    pub world_time: u64,
    pub health: f64,
}

impl From<&StepRecord> for TraceStep {
    fn from(r: &StepRecord) -> Self {
        TraceStep {
            coords: r.coords,
            inventory: r.inventory.clone(),
            gui_open: r.gui_open,
            world_time: r.world_time,
            health: r.health,
        }
    }
}

impl From<&StateSnapshot> for TraceStep {
    fn from(s: &StateSnapshot) -> Self {
        TraceStep {
            coords: s.coords,
            inventory: s.inventory.clone(),
            gui_open: s.gui_open,
            world_time: s.world_time,
            health: s.health,
        }
    }
}

/// Per-step samples of one attempt; the first sample is the pre-state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptTrace {
    pub steps: Vec<TraceStep>,
    pub env_terminated: bool,
    pub action_rejected: bool,
    pub risk_abort: bool,
    pub missing_requirement: Option<String>,
}

impl AttemptTrace {
    pub fn new(first: TraceStep) -> Self {
        AttemptTrace {
            steps: vec![first],
            env_terminated: false,
            action_rejected: false,
            risk_abort: false,
            missing_requirement: None,
        }
    }

    /// Build from raw samples; `None` when empty or time does not advance.
    pub fn from_steps(steps: Vec<TraceStep>) -> Option<Self> {
        let ok = !steps.is_empty() && steps.windows(2).all(|w| w[1].world_time > w[0].world_time);
        ok.then(|| AttemptTrace { steps, ..AttemptTrace::new(placeholder()) })
    }

    pub fn push(&mut self, s: TraceStep) {
        self.steps.push(s);
    }

    /// L1 norm of the first-to-last inventory change.
    pub fn net_inventory_l1(&self) -> u64 {
        match (self.steps.first(), self.steps.last()) {
            (Some(a), Some(b)) => inventory_delta(&a.inventory, &b.inventory).values().map(|d| d.unsigned_abs()).sum(),
            _ => 0,
        }
    }

    /// Sum of absolute per-step inventory changes.
    pub fn total_inventory_l1(&self) -> u64 {
        self.steps
            .windows(2)
            .map(|w| inventory_delta(&w[0].inventory, &w[1].inventory).values().map(|d| d.unsigned_abs()).sum::<u64>())
            .sum()
    }
}

fn placeholder() -> TraceStep {
    TraceStep { coords: [0.0; 3], inventory: Inventory::new(), gui_open: false, world_time: 0, health: 0.0 }
}

/// The six continuous indicators, in slot order.
pub fn indicators(
    pre: &StateSnapshot,
    post: &StateSnapshot,
    trace: &AttemptTrace,
    cfg: &StagnationConfig,
) -> [f64; INDICATOR_DIM] {
    let w = window_stats(trace, cfg.window_k, cfg.still_step);
    let (open, close) = gui_transitions(trace);
    let d = [post.coords[0] - pre.coords[0], post.coords[1] - pre.coords[1], post.coords[2] - pre.coords[2]];
    [
        w.variance,
        trace.total_inventory_l1() as f64,
        open as f64,
        close as f64,
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt(),
        post.health - pre.health,
    ]
}

/// Build the full diagnosis record for one attempt.
pub fn diagnose(
    pre: &StateSnapshot,
    post: &StateSnapshot,
    subgoal: &SubgoalSpec,
    trace: &AttemptTrace,
    monitor_result: bool,
    monitor_ever_true: bool,
    timed_out: bool,
    cfg: &StagnationConfig,
) -> Result<DiagnosisRecord, ModelError> {
    let diff = compute_state_diff(pre, post)?;
    let reason = (!monitor_result)
        .then(|| classify_failure(trace, subgoal, monitor_ever_true || monitor_result, timed_out, cfg));
    DiagnosisRecord::new(monitor_result, diff, reason, indicators(pre, post, trace, cfg))
}
