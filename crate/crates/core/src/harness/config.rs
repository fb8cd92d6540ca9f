use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::tasks::{find_task, load_suite, shipped_tasks, TaskDef};
use super::HarnessError;
use crate::controller::{ControllerConfig, LearningSwitches};
use crate::planner::{
    ExternalPlanner, ExternalPlannerConfig, Planner, PlannerFaults, PromptTemplates, ScriptedPlanner,
};
use crate::sim::RecipeGraph;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ColdStart,
    #[default]
    SelfLearning,
    PretrainFreeze,
    MixedSampling,
}

impl Strategy {
    pub fn is_curriculum(self) -> bool {
        matches!(self, Strategy::PretrainFreeze | Strategy::MixedSampling)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    NoSkillDistill,
    NoGuardDistill,
    NoKnowledgeVisibility,
    PlanningOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Scripted,
    External,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub backend: Backend,
    pub faults: PlannerFaults,
    pub external: ExternalPlannerConfig,
    /// Directory whose template files replace the built-in prompt cards.
    pub templates_dir: Option<PathBuf>,
}

impl PlannerConfig {
    pub fn build(&self) -> Result<Box<dyn Planner>, HarnessError> {
        match self.backend {
            Backend::Scripted => Ok(Box::new(ScriptedPlanner::new(RecipeGraph::shipped(), self.faults))),
            Backend::External => {
                let templates = PromptTemplates::load(self.templates_dir.as_deref())
                    .map_err(|e| HarnessError::Config(format!("planner.templates_dir: {e}")))?;
                Ok(Box::new(ExternalPlanner::new(self.external.clone(), templates)?))
            }
        }
    }
}

/// Everything a sweep or curriculum run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    /// Seeds for checkpoint evaluation; kept apart from training seeds.
    pub heldout_seeds: Vec<u64>,
    /// Task names; empty means the shipped suite.
    pub tasks: Vec<String>,
    /// YAML or JSON file with extra task definitions.
    pub suite_file: Option<PathBuf>,
    pub easy_pool: Vec<String>,
    pub hard_pool: Vec<String>,
    pub strategy: Strategy,
    pub ablations: BTreeSet<Ablation>,
    pub hazard: bool,
    /// Episode budget for curriculum runs.
    pub episodes: usize,
    /// Progress points, in percent of the budget, where checkpoints run.
    pub checkpoints: Vec<u32>,
    pub store_window: usize,
    pub planner: PlannerConfig,
    pub controller: ControllerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seeds: (0..10).collect(),
            heldout_seeds: vec![1000, 1001, 1002],
            tasks: Vec::new(),
            suite_file: None,
            easy_pool: vec!["gather_logs".into(), "craft_planks".into(), "craft_wooden_pickaxe".into()],
            hard_pool: vec!["craft_stone_pickaxe".into(), "craft_furnace".into(), "smelt_iron_ingot".into()],
            strategy: Strategy::SelfLearning,
            ablations: BTreeSet::new(),
            hazard: false,
            episodes: 200,
            checkpoints: vec![20, 40, 60, 80, 100],
            store_window: 256,
            planner: PlannerConfig::default(),
            controller: ControllerConfig::default(),
        }
    }
}

/// Short names accepted by `set` in place of full dotted paths.
const ALIASES: &[(&str, &str)] = &[
    ("k_tol", "controller.k_tol"),
    ("replan_budget", "controller.replan_budget"),
    ("step_budget", "controller.step_budget"),
    ("alpha", "controller.recall.alpha"),
    ("beta", "controller.recall.beta"),
    ("k", "controller.recall.k"),
    ("top_k", "controller.recall.k"),
    ("window_k", "controller.stagnation.window_k"),
    ("eps_nav", "controller.stagnation.eps_nav"),
    ("eps_inv", "controller.stagnation.eps_inv"),
    ("w", "store_window"),
    ("backend", "planner.backend"),
    ("omit_stations", "planner.faults.omit_stations"),
    ("tight_timeouts", "planner.faults.tight_timeouts"),
    ("endpoint", "planner.external.endpoint"),
    ("model", "planner.external.model"),
];

impl RunConfig {
    /// Parse a YAML or JSON document (JSON is valid YAML).
    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        serde_yaml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Override one field. `key` is a dotted path or a short alias; `value`
    /// is read as a YAML scalar or flow collection.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let path = ALIASES.iter().find(|(a, _)| *a == key).map(|(_, p)| *p).unwrap_or(key);
        let new: Value = serde_yaml::from_str(value).map_err(|e| HarnessError::Config(format!("{key}: {e}")))?;
        let mut doc = serde_json::to_value(&*self).expect("config serializes");
        let mut slot = &mut doc;
        for part in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| HarnessError::Config(format!("unknown setting `{key}`")))?;
        }
        *slot = new;
        *self = serde_json::from_value(doc).map_err(|e| HarnessError::Config(format!("{key}: {e}")))?;
        Ok(())
    }

    pub fn switches(&self) -> LearningSwitches {
        let mut s = LearningSwitches::default();
        for a in &self.ablations {
            match a {
                Ablation::NoSkillDistill => s.distill_skills = false,
                Ablation::NoGuardDistill => s.distill_guards = false,
                Ablation::NoKnowledgeVisibility => s.knowledge_visible = false,
                Ablation::PlanningOnly => s.planning_only = true,
            }
        }
        if self.strategy == Strategy::ColdStart {
            s.kb_writable = false;
        }
        s
    }

    fn resolve(&self, names: &[String], extra: &[TaskDef]) -> Result<Vec<TaskDef>, HarnessError> {
        names
            .iter()
            .map(|n| {
                extra
                    .iter()
                    .find(|t| &t.name == n)
                    .cloned()
                    .or_else(|| find_task(n))
                    .ok_or_else(|| HarnessError::Config(format!("unknown task `{n}`")))
            })
            .collect()
    }

    fn extra_tasks(&self) -> Result<Vec<TaskDef>, HarnessError> {
        match &self.suite_file {
            Some(p) => load_suite(p),
            None => Ok(Vec::new()),
        }
    }

    /// A task by name from the suite file, falling back to the shipped set.
    pub fn task(&self, name: &str) -> Result<TaskDef, HarnessError> {
        self.resolve(&[name.to_string()], &self.extra_tasks()?).map(|mut v| v.remove(0))
    }

    /// Tasks of a sweep, in the order given.
    pub fn suite(&self) -> Result<Vec<TaskDef>, HarnessError> {
        let extra = self.extra_tasks()?;
        if self.tasks.is_empty() {
            let mut all = shipped_tasks();
            all.extend(extra.into_iter().filter(|t| find_task(&t.name).is_none()));
            return Ok(all);
        }
        self.resolve(&self.tasks, &extra)
    }

    pub fn pools(&self) -> Result<(Vec<TaskDef>, Vec<TaskDef>), HarnessError> {
        let extra = self.extra_tasks()?;
        Ok((self.resolve(&self.easy_pool, &extra)?, self.resolve(&self.hard_pool, &extra)?))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("seeds: at least one seed is required");
        }
        if let Some(s) = self.heldout_seeds.iter().find(|s| self.seeds.contains(s)) {
            return Err(HarnessError::Config(format!("heldout_seeds: seed {s} is also a training seed")));
        }
        if self.store_window == 0 {
            return bad("store_window: must be positive");
        }
        if self.controller.k_tol == 0 {
            return bad("controller.k_tol: must be positive");
        }
        if self.checkpoints.iter().any(|p| *p == 0 || *p > 100) {
            return bad("checkpoints: percentages must lie in 1..=100");
        }
        if self.strategy.is_curriculum() {
            if self.easy_pool.is_empty() || self.hard_pool.is_empty() {
                return bad("easy_pool and hard_pool: this strategy needs both pools");
            }
            if self.episodes == 0 {
                return bad("episodes: must be positive");
            }
            self.pools()?;
        } else {
            self.suite()?;
        }
        Ok(())
    }
}
