//! Run configuration, seed sweeps, curriculum strategies and reports.

use thiserror::Error;

pub mod config;
pub mod eval;
pub mod replay;
pub mod report;
pub mod tasks;

pub use config::{Ablation, Backend, PlannerConfig, RunConfig, Strategy};
pub use eval::{curriculum_run, run, run_eval, EventLogs};
pub use replay::{replay_skill, ReplayOutcome};
pub use report::{render_table, Checkpoint, EpisodeRow, KbSummary, Rate, Report};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Planner(#[from] crate::planner::PlannerError),
    #[error(transparent)]
    Store(#[from] crate::store::StoreError),
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}
