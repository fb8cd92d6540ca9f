//! Plan producers: a deterministic recipe-chaining planner and a remote
//! chat-completion planner, both fed the same request.

mod external;
mod prompt;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distill::{Guardrail, Skill};
use crate::model::{Inventory, PlanSpec, SchemaError, StateSnapshot};
use crate::recall::MemoryCapsule;

pub use external::{extract_json_object, json_objects, plan_from_reply, ExternalPlanner, ExternalPlannerConfig};
pub use prompt::{render_planner_prompt, Prompt, PromptTemplates, REPAIR_TEMPLATE, SYSTEM_TEMPLATE};
pub use scripted::{parse_cell_constraint, ScriptedPlanner, TIMEOUT_STRETCH};

/// Deliberate planner defects used to exercise knowledge recovery.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerFaults {
    /// Never plan the crafting station a recipe needs.
    pub omit_stations: bool,
    /// Budget only half of the pure break or cook time.
    pub tight_timeouts: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RequestMode {
    Initial,
    Replan { remaining_goal: String, failed_condition: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerRequest {
    pub plan_id: String,
    pub goal: String,
    pub mode: RequestMode,
    pub state: StateSnapshot,
    pub init_commands: Vec<String>,
    /// Stations already standing in the world within walking reach.
    #[serde(default)]
    pub placed_stations: Vec<String>,
    /// Items sitting inside placed containers such as a furnace.
    #[serde(default)]
    pub stored_items: Inventory,
    pub capsule: MemoryCapsule,
    pub skills: Vec<Skill>,
    pub guardrails: Vec<Guardrail>,
}

impl PlannerRequest {
    pub fn initial(plan_id: impl Into<String>, goal: impl Into<String>, state: StateSnapshot) -> Self {
        PlannerRequest {
            plan_id: plan_id.into(),
            goal: goal.into(),
            mode: RequestMode::Initial,
            state,
            init_commands: Vec::new(),
            placed_stations: Vec::new(),
            stored_items: Inventory::new(),
            capsule: MemoryCapsule::default(),
            skills: Vec::new(),
            guardrails: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("goal '{0}' names no known item")]
    UnknownGoal(String),
    #[error("planner configuration: {0}")]
    Config(String),
    #[error("planner transport: {0}")]
    Transport(String),
    #[error("plan rejected after {attempts} attempts: {error}")]
    Schema { attempts: u32, error: SchemaError, raw: String },
}

pub trait Planner {
    fn plan(&mut self, req: &PlannerRequest) -> Result<PlanSpec, PlannerError>;
}
