//! Shared domain vocabulary: snapshots, checks, plans, diagnosis records and
//! experience tuples, plus the pure transformations between them.

mod check;
mod experience;
mod plan;
mod state;

use thiserror::Error;

pub use check::{CheckKind, CheckSpec};
pub use experience::{DiagnosisRecord, ExperienceTuple, FailureReason, INDICATOR_DIM, INDICATOR_NAMES};
pub use plan::{parse_plan, validate_plan, ExecutorHint, Mode, PlanSpec, SubgoalSpec, TaskKind, MAX_CONDITION_TOKENS};
pub use state::{
    compute_state_diff, inventory_delta, Coords, GuiEvents, GuiState, GuiTransition, InvDelta, Inventory, StateDiff,
    StateSnapshot,
};

/// A plan or check document that violates the schema. `path` names the
/// offending field, e.g. `subgoals[1].checks[0].item`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("snapshots belong to different episodes ({pre} vs {post})")]
    EpisodeMismatch { pre: String, post: String },
    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),
    #[error("invalid diagnosis record: {0}")]
    InvalidDiagnosis(String),
    #[error("invalid experience tuple: {0}")]
    InvalidTuple(String),
}
