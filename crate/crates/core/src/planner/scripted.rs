use std::collections::{BTreeMap, BTreeSet};

use super::{Planner, PlannerError, PlannerFaults, PlannerRequest, RequestMode};
use crate::diagnosis::check_holds;
use crate::distill::{match_guardrails, parse_goal, step_verb, Goal, GuardLevel, Guardrail, MatchContext, Skill};
use crate::model::{
    CheckKind, CheckSpec, ExecutorHint, FailureReason, Inventory, Mode, PlanSpec, StateSnapshot, SubgoalSpec, TaskKind,
};
use crate::recall::condition_hash;
use crate::sim::items::ToolTier;
use crate::sim::recipes::COOK_TICKS;
use crate::sim::{Block, RecipeGraph, Station};

const DETOUR_CONDITION: &str = "relocate away from blocked cell";
/// Factor applied to a subgoal's timeout when a guard says it ran out of time.
pub const TIMEOUT_STRETCH: u32 = 3;
const TRAVEL_TICKS: u32 = 60;
const MAX_TIMEOUT_S: u32 = 600;

/// Backward-chains the recipe graph from the goal item, then reacts to
/// whatever guards the request carries.
#[derive(Debug, Clone)]
pub struct ScriptedPlanner {
    recipes: RecipeGraph,
    faults: PlannerFaults,
}

struct Reserve<'a> {
    recipes: &'a RecipeGraph,
    avail: BTreeMap<String, u32>,
    produce: BTreeMap<String, u32>,
    stations: BTreeSet<Station>,
    omit_stations: bool,
    forced: &'a BTreeSet<String>,
}

impl Reserve<'_> {
    fn need(&mut self, item: &str, n: u32) {
        let have = self.avail.get(item).copied().unwrap_or(0);
        let take = have.min(n);
        if take > 0 {
            *self.avail.get_mut(item).expect("present") -= take;
        }
        let missing = n - take;
        if missing == 0 {
            return;
        }
        match self.recipes.recipe_for(item).cloned() {
            None => {
                if let Some(t) = self.recipes.mining_tier(item) {
                    self.ensure_tool(t);
                }
                *self.produce.entry(item.to_string()).or_default() += missing;
            }
            Some(r) => {
                let crafts = missing.div_ceil(r.output_count.max(1));
                for (input, q) in &r.inputs {
                    self.need(input, q * crafts);
                }
                if let Some(f) = &r.fuel {
                    self.need(f, crafts);
                }
                if let Some(st) = r.station.item() {
                    if !self.omit_stations || self.forced.contains(st) {
                        self.ensure_station(r.station);
                    }
                }
                *self.produce.entry(item.to_string()).or_default() += crafts;
                *self.avail.entry(item.to_string()).or_default() += crafts * r.output_count - missing;
            }
        }
    }

    fn ensure_tool(&mut self, tier: ToolTier) {
        let held = [ToolTier::Wooden, ToolTier::Stone, ToolTier::Iron]
            .into_iter()
            .filter(|t| *t >= tier)
            .filter_map(|t| t.tool_item())
            .any(|i| self.avail.get(i).copied().unwrap_or(0) > 0);
        if held {
            return;
        }
        if let Some(tool) = tier.tool_item() {
            self.need(tool, 1);
            *self.avail.entry(tool.to_string()).or_default() += 1;
        }
    }

    fn ensure_station(&mut self, st: Station) {
        if !self.stations.insert(st) {
            return;
        }
        if let Some(item) = st.item() {
            self.need(item, 1);
        }
    }
}

fn best_tier(inv: &BTreeMap<String, u32>) -> ToolTier {
    [ToolTier::Iron, ToolTier::Stone, ToolTier::Wooden]
        .into_iter()
        .find(|t| t.tool_item().is_some_and(|i| inv.get(i).copied().unwrap_or(0) > 0))
        .unwrap_or(ToolTier::Hand)
}

fn secs(ticks: u32) -> u32 {
    ticks.div_ceil(20)
}

impl ScriptedPlanner {
    pub fn new(recipes: RecipeGraph, faults: PlannerFaults) -> Self {
        ScriptedPlanner { recipes, faults }
    }

    pub fn faults(&self) -> PlannerFaults {
        self.faults
    }

    fn deps(&self, item: &str) -> Vec<String> {
        let mut out = Vec::new();
        match self.recipes.recipe_for(item) {
            Some(r) => {
                out.extend(r.inputs.keys().cloned());
                out.extend(r.fuel.clone());
                out.extend(r.station.item().map(str::to_string));
            }
            None => out.extend(self.recipes.mining_tier(item).and_then(|t| t.tool_item()).map(str::to_string)),
        }
        out
    }

    fn order(&self, item: &str, produce: &BTreeMap<String, u32>, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
        if !seen.insert(item.to_string()) {
            return;
        }
        for d in self.deps(item) {
            self.order(&d, produce, seen, out);
        }
        if produce.get(item).copied().unwrap_or(0) > 0 {
            out.push(item.to_string());
        }
    }

    /// Recipe-chained steps reaching `goal` from `inventory`. Items in
    /// `forced` are produced or placed even when a fault would skip them.
    pub fn draft(
        &self,
        goal: &Goal,
        inventory: &Inventory,
        placed: &[String],
        forced: &BTreeSet<String>,
    ) -> Vec<SubgoalSpec> {
        let standing: BTreeSet<Station> = [Station::Table, Station::Furnace]
            .into_iter()
            .filter(|s| s.item().is_some_and(|i| placed.iter().any(|p| p == i)))
            .collect();
        let mut r = Reserve {
            recipes: &self.recipes,
            avail: inventory.clone(),
            produce: BTreeMap::new(),
            stations: standing.clone(),
            omit_stations: self.faults.omit_stations,
            forced,
        };
        for f in forced {
            if [Station::Table, Station::Furnace].iter().any(|s| s.item() == Some(f.as_str())) {
                continue;
            }
            if !self.recipes.closure(&goal.item).contains(f) && inventory.get(f).copied().unwrap_or(0) == 0 {
                r.need(f, 1);
                *r.avail.entry(f.clone()).or_default() += 1;
            }
        }
        r.need(&goal.item, goal.count);
        let produce = r.produce;

        let mut order = Vec::new();
        let mut seen = BTreeSet::new();
        for f in forced {
            self.order(f, &produce, &mut seen, &mut order);
        }
        self.order(&goal.item, &produce, &mut seen, &mut order);

        let mut sim = inventory.clone();
        let mut placed = standing;
        let mut steps = Vec::new();
        for item in order {
            let units = produce[&item];
            let (kind, hint, mode, full, pure) = match self.recipes.recipe_for(&item) {
                None => {
                    let tier = best_tier(&sim);
                    let bt = Block::sources_of(&item).iter().filter_map(|b| b.break_ticks(tier)).min().unwrap_or(40);
                    *sim.entry(item.clone()).or_default() += units;
                    (TaskKind::Mine, ExecutorHint::Default, Mode::Move, units * (bt + TRAVEL_TICKS) + 200, units * bt)
                }
                Some(rec) => {
                    for (input, q) in &rec.inputs {
                        let e = sim.entry(input.clone()).or_default();
                        *e = e.saturating_sub(q * units);
                    }
                    if let Some(f) = &rec.fuel {
                        let e = sim.entry(f.clone()).or_default();
                        *e = e.saturating_sub(units);
                    }
                    if let Some(st) = rec.station.item() {
                        if !placed.contains(&rec.station) && sim.get(st).copied().unwrap_or(0) > 0 {
                            *sim.get_mut(st).expect("present") -= 1;
                            placed.insert(rec.station);
                        }
                    }
                    *sim.entry(item.clone()).or_default() += units * rec.output_count;
                    let (full, pure) = if rec.station == Station::Furnace {
                        (units * COOK_TICKS + 300, units * COOK_TICKS)
                    } else {
                        (units * 2 + 200 + if rec.station == Station::None { 0 } else { 200 }, units)
                    };
                    (TaskKind::Craft, ExecutorHint::CraftStation, Mode::Stay, full, pure)
                }
            };
            let timeout_s = if self.faults.tight_timeouts { secs(pure / 2).max(1) } else { secs(full) };
            let target = sim.get(&item).copied().unwrap_or(0).max(1);
            steps.push(SubgoalSpec {
                subgoal_id: String::new(),
                condition: format!("{} {item}", step_verb(&self.recipes, &item)),
                timeout_s,
                task_kind: kind,
                executor_hint: hint,
                mode,
                checks: vec![CheckSpec::inv_ge(&item, target as i64)],
            });
        }
        if steps.is_empty() {
            steps.push(SubgoalSpec {
                subgoal_id: String::new(),
                condition: format!("confirm {} in inventory", goal.item),
                timeout_s: 1,
                task_kind: TaskKind::Wait,
                executor_hint: ExecutorHint::Wait,
                mode: Mode::Stay,
                checks: vec![CheckSpec::inv_ge(&goal.item, goal.count as i64)],
            });
        }
        steps
    }

    fn pick_skill<'a>(&self, goal: &Goal, skills: &'a [Skill], state: &StateSnapshot) -> Option<&'a Skill> {
        skills
            .iter()
            .filter(|s| {
                parse_goal(&s.goal).is_some_and(|g| g.item == goal.item && g.count >= goal.count)
                    && s.preconditions.iter().all(|c| check_holds(c, state))
            })
            .max_by(|a, b| a.success_count.cmp(&b.success_count).then(b.name.cmp(&a.name)))
    }

    fn tags_for(step: &SubgoalSpec, state: &StateSnapshot) -> BTreeSet<String> {
        let mut t = BTreeSet::from([step.task_kind.as_str().to_string()]);
        t.extend(step.checks.iter().filter_map(|c| c.item.clone()));
        t.insert(crate::recall::zone_label(state.coords));
        t
    }

    /// Apply subgoal-level guards: reroute around hazards and cells, give
    /// starved subgoals more time.
    fn react(
        &self,
        goal: &str,
        steps: Vec<SubgoalSpec>,
        guards: &[&Guardrail],
        state: &StateSnapshot,
    ) -> (Vec<SubgoalSpec>, Vec<String>) {
        let mut out = Vec::new();
        let mut constraints = BTreeSet::new();
        for mut step in steps {
            let mut ctx = MatchContext::for_goal(goal);
            ctx.add_subgoal(step.task_kind, &step.condition);
            ctx.tags = Self::tags_for(&step, state);
            let sig = condition_hash(step.task_kind, &step.condition);
            let mut detour = false;
            for g in guards.iter().filter(|g| g.level == GuardLevel::Subgoal && g.trigger.matches(&ctx)) {
                if g.trigger.cond_sig.is_some_and(|s| s != sig) {
                    continue;
                }
                match g.consequence.reason {
                    Some(r) if r.is_hazard() => {
                        constraints.insert("avoid_hazard".to_string());
                    }
                    Some(r) if r.is_spatial() => {
                        if let Some(c) = g.trigger.spatial_cell {
                            constraints.insert(format!("avoid_cell:{c:016x}"));
                        }
                        detour = true;
                    }
                    Some(FailureReason::MonitorNeverTrue | FailureReason::Timeout) => {
                        step.timeout_s = (step.timeout_s * TIMEOUT_STRETCH).min(MAX_TIMEOUT_S);
                    }
                    _ => {}
                }
            }
            if detour && out.last().is_none_or(|p: &SubgoalSpec| p.condition != DETOUR_CONDITION) {
                out.push(SubgoalSpec {
                    subgoal_id: String::new(),
                    condition: DETOUR_CONDITION.to_string(),
                    timeout_s: 15,
                    task_kind: TaskKind::Wait,
                    executor_hint: ExecutorHint::Default,
                    mode: Mode::Move,
                    checks: vec![CheckSpec::with_n(CheckKind::CoordMovedGe, 4)],
                });
            }
            out.push(step);
        }
        (out, constraints.into_iter().collect())
    }
}

impl Planner for ScriptedPlanner {
    fn plan(&mut self, req: &PlannerRequest) -> Result<PlanSpec, PlannerError> {
        let goal_text = match &req.mode {
            RequestMode::Initial => req.goal.as_str(),
            RequestMode::Replan { remaining_goal, .. } => remaining_goal.as_str(),
        };
        let goal = parse_goal(goal_text).ok_or_else(|| PlannerError::UnknownGoal(goal_text.to_string()))?;
        let guards: Vec<&Guardrail> = req.guardrails.iter().collect();

        let mut have = req.state.inventory.clone();
        for (item, n) in &req.stored_items {
            *have.entry(item.clone()).or_default() += n;
        }
        let steps = match self.pick_skill(&goal, &req.skills, &req.state) {
            Some(skill) => skill.steps.iter().filter(|s| s.condition != DETOUR_CONDITION).cloned().collect(),
            None => {
                let draft = self.draft(&goal, &have, &req.placed_stations, &BTreeSet::new());
                let mut ctx = MatchContext::for_goal(&req.goal);
                for s in &draft {
                    ctx.add_subgoal(s.task_kind, &s.condition);
                }
                let forced: BTreeSet<String> = match_guardrails(guards.iter().copied(), &ctx)
                    .into_iter()
                    .filter(|g| g.level == GuardLevel::Task)
                    .flat_map(|g| g.require.iter().flatten())
                    .filter_map(|s| s.target_item().map(str::to_string))
                    .collect();
                if forced.is_empty() {
                    draft
                } else {
                    self.draft(&goal, &have, &req.placed_stations, &forced)
                }
            }
        };
        let (mut steps, constraints) = self.react(&req.goal, steps, &guards, &req.state);
        for (i, s) in steps.iter_mut().enumerate() {
            s.subgoal_id = format!("sg_{:03}", i + 1);
        }
        let plan = PlanSpec { plan_id: req.plan_id.clone(), subgoals: steps, global_constraints: constraints };
        plan.validate().map_err(|error| PlannerError::Schema { attempts: 1, error, raw: String::new() })?;
        Ok(plan)
    }
}

/// Cell id of a spatial guard constraint such as `avoid_cell:00ab...`.
pub fn parse_cell_constraint(c: &str) -> Option<u64> {
    u64::from_str_radix(c.strip_prefix("avoid_cell:")?, 16).ok()
}
