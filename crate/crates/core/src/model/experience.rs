use std::fmt;

use serde::{Deserialize, Serialize};

use super::plan::SubgoalSpec;
use super::state::{StateDiff, StateSnapshot};
use super::ModelError;

/// The eleven failure categories, declared in arbitration priority order
/// (earlier variants win when several apply).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureReason {
    EnvTerminated,
    RiskAbort,
    ActionInvalid,
    ToolMissing,
    GuiBlocked,
    NavStuck,
    NavOscillate,
    PathUnreachable,
    MonitorNeverTrue,
    Timeout,
    Unknown,
}

impl FailureReason {
    pub const ALL: [FailureReason; 11] = [
        FailureReason::EnvTerminated,
        FailureReason::RiskAbort,
        FailureReason::ActionInvalid,
        FailureReason::ToolMissing,
        FailureReason::GuiBlocked,
        FailureReason::NavStuck,
        FailureReason::NavOscillate,
        FailureReason::PathUnreachable,
        FailureReason::MonitorNeverTrue,
        FailureReason::Timeout,
        FailureReason::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::EnvTerminated => "ENV_TERMINATED",
            FailureReason::RiskAbort => "RISK_ABORT",
            FailureReason::ActionInvalid => "ACTION_INVALID",
            FailureReason::ToolMissing => "TOOL_MISSING",
            FailureReason::GuiBlocked => "GUI_BLOCKED",
            FailureReason::NavStuck => "NAV_STUCK",
            FailureReason::NavOscillate => "NAV_OSCILLATE",
            FailureReason::PathUnreachable => "PATH_UNREACHABLE",
            FailureReason::MonitorNeverTrue => "MONITOR_NEVER_TRUE",
            FailureReason::Timeout => "TIMEOUT",
            FailureReason::Unknown => "UNKNOWN",
        }
    }

    pub fn parse(s: &str) -> Option<FailureReason> {
        FailureReason::ALL.iter().copied().find(|r| r.as_str() == s)
    }

    /// Position in the arbitration order; lower wins.
    pub fn priority(self) -> usize {
        self as usize
    }

    /// Reasons tied to a place in the world rather than to the action itself.
    pub fn is_spatial(self) -> bool {
        matches!(self, FailureReason::NavStuck | FailureReason::NavOscillate | FailureReason::PathUnreachable)
    }

    /// Reasons caused by physical danger to the agent.
    pub fn is_hazard(self) -> bool {
        matches!(self, FailureReason::RiskAbort | FailureReason::EnvTerminated)
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Number of continuous indicators in every diagnosis record.
pub const INDICATOR_DIM: usize = 6;

/// Slot names of [`DiagnosisRecord::indicators`], in order.
pub const INDICATOR_NAMES: [&str; INDICATOR_DIM] =
    ["coord_variance", "inv_change_l1", "gui_open_count", "gui_close_count", "net_displacement", "health_delta"];

/// Output of the diagnosis function for one attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDiagnosis")]
pub struct DiagnosisRecord {
    pub outcome: bool,
    pub state_diff: StateDiff,
    pub failure_reason: Option<FailureReason>,
    pub indicators: [f64; INDICATOR_DIM],
}

#[derive(Deserialize)]
struct RawDiagnosis {
    outcome: bool,
    state_diff: StateDiff,
    failure_reason: Option<FailureReason>,
    indicators: [f64; INDICATOR_DIM],
}

impl TryFrom<RawDiagnosis> for DiagnosisRecord {
    type Error = ModelError;

    fn try_from(r: RawDiagnosis) -> Result<Self, ModelError> {
        DiagnosisRecord::new(r.outcome, r.state_diff, r.failure_reason, r.indicators)
    }
}

impl DiagnosisRecord {
    /// Checked constructor: a success carries no reason, a failure carries
    /// exactly one, and every indicator is finite.
    pub fn new(
        outcome: bool,
        state_diff: StateDiff,
        failure_reason: Option<FailureReason>,
        indicators: [f64; INDICATOR_DIM],
    ) -> Result<Self, ModelError> {
        if outcome == failure_reason.is_some() {
            return Err(ModelError::InvalidDiagnosis("outcome and failure_reason must be mutually exclusive".into()));
        }
        if indicators.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidDiagnosis("indicators must be finite".into()));
        }
        Ok(DiagnosisRecord { outcome, state_diff, failure_reason, indicators })
    }
}

/// One subgoal attempt: pre-state, action, diagnosis, post-state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceTuple {
    pub doc_id: String,
    pub episode_id: String,
    pub attempt_index: u32,
    pub s_pre: StateSnapshot,
    pub action: SubgoalSpec,
    pub diagnosis: DiagnosisRecord,
    pub s_post: StateSnapshot,
}

impl ExperienceTuple {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.s_pre.validate()?;
        self.s_post.validate()?;
        if self.s_pre.world_time > self.s_post.world_time {
            return Err(ModelError::InvalidTuple("s_pre.world_time exceeds s_post.world_time".into()));
        }
        let expect = super::state::inventory_delta(&self.s_pre.inventory, &self.s_post.inventory);
        if expect != self.diagnosis.state_diff.inventory {
            return Err(ModelError::InvalidTuple("diagnosis inventory delta disagrees with snapshots".into()));
        }
        Ok(())
    }

    pub fn outcome(&self) -> bool {
        self.diagnosis.outcome
    }
}
