use serde::{Deserialize, Serialize};

use crate::model::{CheckSpec, ExecutorHint, Mode, SubgoalSpec, TaskKind};
use crate::sim::items::is_known_item;
use crate::sim::{RecipeGraph, Station};

/// A task goal such as `gather 3 oak_log` or `craft an iron pickaxe`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub verb: String,
    pub count: u32,
    pub item: String,
}

fn singular(t: &str) -> &str {
    if t.len() > 3 && t.ends_with('s') && !t.ends_with("ss") {
        &t[..t.len() - 1]
    } else {
        t
    }
}

/// Find the verb, count and registry item named by a goal phrase.
pub fn parse_goal(text: &str) -> Option<Goal> {
    let toks: Vec<String> = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect();
    let verb = toks.first()?.clone();
    let count = toks.iter().find_map(|t| t.parse::<u32>().ok()).unwrap_or(1).max(1);
    let mut item = None;
    'outer: for len in (1..=3).rev() {
        for start in (0..toks.len()).rev() {
            if start + len > toks.len() {
                continue;
            }
            let joined = toks[start..start + len].join("_");
            for cand in [joined.as_str(), singular(&joined)] {
                if is_known_item(cand) {
                    item = Some(cand.to_string());
                    break 'outer;
                }
            }
        }
    }
    Some(Goal { verb, count, item: item? })
}

/// Generalize a goal: the item's leading segment becomes `*` when it has one.
pub fn goal_pattern(goal: &str) -> String {
    let Some(g) = parse_goal(goal) else { return goal.trim().to_ascii_lowercase() };
    match g.item.split_once('_') {
        Some((_, rest)) => format!("{} *_{rest}", g.verb),
        None => format!("{} {}", g.verb, g.item),
    }
}

/// Glob match where `*` spans any run of characters.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.to_ascii_lowercase().chars().collect();
    let t: Vec<char> = text.to_ascii_lowercase().chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|c| *c == '*')
}

/// Verb the canonical step for `item` uses.
pub fn step_verb(recipes: &RecipeGraph, item: &str) -> &'static str {
    match recipes.recipe_for(item) {
        None => "mine",
        Some(r) if r.station == Station::Furnace => "smelt",
        Some(_) => "craft",
    }
}

/// Canonical condition text for producing `item`.
pub fn step_condition(recipes: &RecipeGraph, item: &str) -> String {
    format!("{} {item}", step_verb(recipes, item))
}

/// Canonical subgoal producing `item` until the inventory holds `target`.
pub fn template_step(recipes: &RecipeGraph, id: &str, item: &str, target: u32, timeout_s: u32) -> SubgoalSpec {
    let verb = step_verb(recipes, item);
    let (task_kind, hint, mode) = match verb {
        "mine" => (TaskKind::Mine, ExecutorHint::Default, Mode::Move),
        _ => (TaskKind::Craft, ExecutorHint::CraftStation, Mode::Stay),
    };
    SubgoalSpec {
        subgoal_id: id.to_string(),
        condition: format!("{verb} {item}"),
        timeout_s: timeout_s.max(1),
        task_kind,
        executor_hint: hint,
        mode,
        checks: vec![CheckSpec::inv_ge(item, target.max(1) as i64)],
    }
}
