use serde::{Deserialize, Serialize};

use std::path::Path;

use super::HarnessError;
use crate::model::CheckSpec;

pub const DEFAULT_STEP_BUDGET: u64 = 6000;

fn default_budget() -> u64 {
    DEFAULT_STEP_BUDGET
}

/// One shipped benchmark task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDef {
    pub name: String,
    pub group: String,
    pub goal: String,
    pub init_commands: Vec<String>,
    pub success_checks: Vec<CheckSpec>,
    #[serde(default = "default_budget")]
    pub step_budget: u64,
}

impl TaskDef {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(format!("task `{}`: {m}", self.name)));
        if self.name.is_empty() {
            return Err(HarnessError::Config("task with an empty name".into()));
        }
        if self.success_checks.is_empty() {
            return bad("success_checks is empty".into());
        }
        if self.step_budget == 0 {
            return bad("step_budget must be positive".into());
        }
        for c in &self.success_checks {
            if let Err(e) = c.validate("success_checks") {
                return bad(e.to_string());
            }
        }
        for c in &self.init_commands {
            if let Err(e) = crate::sim::InitCommand::parse(c) {
                return bad(e.to_string());
            }
        }
        if crate::distill::parse_goal(&self.goal).is_none() {
            return bad(format!("goal `{}` does not parse", self.goal));
        }
        Ok(())
    }
}

fn task(name: &str, group: &str, goal: &str, init: &[&str], item: &str, n: i64) -> TaskDef {
    TaskDef {
        name: name.into(),
        group: group.into(),
        goal: goal.into(),
        init_commands: init.iter().map(|s| s.to_string()).collect(),
        success_checks: vec![CheckSpec::inv_ge(item, n)],
        step_budget: DEFAULT_STEP_BUDGET,
    }
}

pub const GROUPS: [&str; 3] = ["wooden", "stone", "iron"];

/// The eight tasks in curriculum order.
pub fn shipped_tasks() -> Vec<TaskDef> {
    vec![
        task("gather_logs", "wooden", "gather 3 oak_log", &[], "oak_log", 3),
        task("craft_planks", "wooden", "craft 4 plank", &[], "plank", 4),
        task("craft_wooden_pickaxe", "wooden", "craft wooden_pickaxe", &[], "wooden_pickaxe", 1),
        task("mine_cobblestone", "stone", "mine 3 cobblestone", &["/give @p wooden_pickaxe 1"], "cobblestone", 3),
        task("craft_stone_pickaxe", "stone", "craft stone_pickaxe", &["/give @p wooden_pickaxe 1"], "stone_pickaxe", 1),
        task(
            "craft_furnace",
            "stone",
            "craft furnace",
            &["/give @p wooden_pickaxe 1", "/give @p crafting_table 1"],
            "furnace",
            1,
        ),
        task(
            "smelt_iron_ingot",
            "iron",
            "smelt iron_ingot",
            &["/give @p stone_pickaxe 1", "/give @p furnace 1"],
            "iron_ingot",
            1,
        ),
        task(
            "craft_iron_pickaxe",
            "iron",
            "craft iron_pickaxe",
            &["/give @p stone_pickaxe 1", "/give @p crafting_table 1", "/give @p furnace 1", "/give @p stick 2"],
            "iron_pickaxe",
            1,
        ),
    ]
}

pub fn find_task(name: &str) -> Option<TaskDef> {
    shipped_tasks().into_iter().find(|t| t.name == name)
}

/// Read a list of task definitions from a YAML or JSON file.
pub fn load_suite(path: &Path) -> Result<Vec<TaskDef>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    parse_suite(&text)
}

pub fn parse_suite(text: &str) -> Result<Vec<TaskDef>, HarnessError> {
    let tasks: Vec<TaskDef> = serde_yaml::from_str(text).map_err(|e| HarnessError::Config(format!("suite: {e}")))?;
    for t in &tasks {
        t.validate()?;
    }
    Ok(tasks)
}
