use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PlannerRequest, RequestMode};
use crate::distill::yaml::{failure_card, recovery};

pub const SYSTEM_TEMPLATE: &str = include_str!("../../templates/planner_system.txt");
pub const REPAIR_TEMPLATE: &str = include_str!("../../templates/planner_repair.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub system: String,
    pub repair: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates { system: SYSTEM_TEMPLATE.to_string(), repair: REPAIR_TEMPLATE.to_string() }
    }
}

impl PromptTemplates {
    /// Built-in templates, with any same-named files in `dir` taking precedence.
    pub fn load(dir: Option<&Path>) -> std::io::Result<Self> {
        let mut t = PromptTemplates::default();
        if let Some(d) = dir {
            for (name, slot) in [("planner_system.txt", &mut t.system), ("planner_repair.txt", &mut t.repair)] {
                let p = d.join(name);
                if p.exists() {
                    *slot = std::fs::read_to_string(p)?;
                }
            }
        }
        Ok(t)
    }

    /// sha256 of each template, keyed by file name.
    pub fn checksums(&self) -> BTreeMap<String, String> {
        [("planner_system.txt", &self.system), ("planner_repair.txt", &self.repair)]
            .into_iter()
            .map(|(n, body)| (n.to_string(), format!("{:x}", Sha256::digest(body.as_bytes()))))
            .collect()
    }

    pub fn repair(&self, error: &str) -> String {
        self.repair.replace("{error}", error)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn list(items: &[String]) -> String {
    serde_json::to_string(items).expect("strings serialize")
}

/// Assemble the system and user text for a planning request.
pub fn render_planner_prompt(req: &PlannerRequest, templates: &PromptTemplates) -> Prompt {
    let mut u = String::new();
    let s = &req.state;
    writeln!(u, "Task: {}", req.goal).unwrap();
    if let RequestMode::Replan { remaining_goal, failed_condition } = &req.mode {
        writeln!(u, "Remaining goal: {remaining_goal}").unwrap();
        writeln!(u, "Blocked subgoal: {failed_condition}").unwrap();
    }
    if !req.init_commands.is_empty() {
        writeln!(u, "\nInit commands (environment pre-initialized):").unwrap();
        for c in &req.init_commands {
            writeln!(u, "- {c}").unwrap();
        }
    }
    let label = match req.mode {
        RequestMode::Initial => "Init state",
        RequestMode::Replan { .. } => "Current state",
    };
    let inv = serde_json::to_string(&s.inventory)
        .expect("inventory serializes")
        .replace(",\"", ", \"")
        .replace("\":", "\": ");
    let coords: Vec<String> = s.coords.iter().map(|c| fmt_num(*c)).collect();
    let stations = if req.placed_stations.is_empty() {
        String::new()
    } else {
        format!(", stations={}", list(&req.placed_stations))
    };
    let stored = if req.stored_items.is_empty() {
        String::new()
    } else {
        let j = serde_json::to_string(&req.stored_items).expect("inventory serializes");
        format!(", stored={}", j.replace(",\"", ", \"").replace("\":", "\": "))
    };
    writeln!(
        u,
        "\n{label}: inventory={inv}, coords=[{}], HP={}, hunger={}{stations}{stored}.",
        coords.join(","),
        fmt_num(s.health),
        fmt_num(s.hunger)
    )
    .unwrap();

    let cap = &req.capsule;
    if !cap.is_empty() {
        writeln!(u, "\nMemory capsule:").unwrap();
        for f in &cap.facts {
            writeln!(u, "- fact: {}={} ({})", f.k.replace(' ', "_"), f.v, f.src).unwrap();
        }
        for c in &cap.constraints {
            writeln!(u, "- constraint: {}={}", c.k, c.v).unwrap();
        }
        if !cap.next_actions.is_empty() {
            writeln!(u, "- next_actions: {}", list(&cap.next_actions)).unwrap();
        }
    }
    if !req.skills.is_empty() {
        writeln!(u, "\nKnown skills:").unwrap();
        for (i, sk) in req.skills.iter().enumerate() {
            if i > 0 {
                writeln!(u).unwrap();
            }
            let pre: Vec<String> = sk.preconditions.iter().map(|c| c.to_compact()).collect();
            let steps: Vec<String> = sk.steps.iter().map(|s| s.condition.clone()).collect();
            writeln!(u, "- name: {}", sk.name).unwrap();
            writeln!(u, "  goal: {}", sk.goal).unwrap();
            writeln!(u, "  preconditions: {}", list(&pre)).unwrap();
            writeln!(u, "  steps: {}", list(&steps)).unwrap();
        }
    }
    if !req.guardrails.is_empty() {
        writeln!(u, "\nKnown failures:").unwrap();
        for (i, g) in req.guardrails.iter().enumerate() {
            if i > 0 {
                writeln!(u).unwrap();
            }
            let card = failure_card(g);
            writeln!(u, "- id: {}", g.guard_id).unwrap();
            writeln!(u, "  symptom: {}", card.symptom).unwrap();
            writeln!(u, "  guardrail: {}", list(&[g.render()])).unwrap();
            let rec = g.consequence.reason.map(recovery).unwrap_or("insert the required step before the goal");
            writeln!(u, "  recovery: {}", list(&[rec.to_string()])).unwrap();
        }
    }
    writeln!(u, "\nReturn the plan as JSON in the schema above.").unwrap();
    Prompt { system: templates.system.clone(), user: u }
}
