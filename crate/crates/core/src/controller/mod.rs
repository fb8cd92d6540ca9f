//! Closed-loop episode execution: plan, execute each subgoal under its
//! monitor, diagnose failures, replan, and distill knowledge at the end.

mod events;
mod executor;
pub mod nav;

use serde::{Deserialize, Serialize};

use crate::diagnosis::{
    compile_checks, detect_stagnation, diagnose, missing_requirement, AttemptTrace, StagnationConfig, TraceStep,
};
use crate::distill::{
    distill_skill, distill_subgoal_guardrail, distill_task_guardrail, group_scope, Guardrail, Knowledge, KnowledgeBase,
    Skill, GLOBAL_SCOPE,
};
use crate::model::{CheckSpec, ExperienceTuple, FailureReason, PlanSpec, SchemaError, SubgoalSpec};
use crate::planner::{Planner, PlannerRequest, RequestMode};
use crate::recall::{recall_topk, MemoryCapsule, RecallConfig, RecallContext};
use crate::sim::world::TICKS_PER_SECOND;
use crate::sim::{apply_all, generate, Action, Station, TerrainConfig, World};
use crate::store::ExperienceStore;

pub use events::{Event, EventSink, JsonlSink, NullSink};
pub use executor::{Executor, Phase, Step, POLL_HOLD};
pub use nav::NavRules;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub warmup_noops: u32,
    /// Consecutive monitor-true steps that confirm a subgoal.
    pub confirm_steps: u32,
    /// Consecutive failures of one subgoal before a replan.
    pub k_tol: usize,
    pub replan_budget: u32,
    pub step_budget: u64,
    /// Abort an attempt when damage leaves health at or below this.
    pub risk_abort_health: Option<f64>,
    pub retreat_steps: usize,
    pub stagnation: StagnationConfig,
    pub recall: RecallConfig,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            warmup_noops: 5,
            confirm_steps: 2,
            k_tol: 3,
            replan_budget: 3,
            step_budget: 6000,
            risk_abort_health: Some(10.0),
            retreat_steps: 0,
            stagnation: StagnationConfig::default(),
            recall: RecallConfig::default(),
        }
    }
}

/// Which parts of the learning loop are active.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningSwitches {
    pub distill_skills: bool,
    pub distill_guards: bool,
    pub knowledge_visible: bool,
    /// First failure ends the episode; nothing is learned.
    pub planning_only: bool,
    pub kb_writable: bool,
    /// Restrict visible knowledge to this group's scope.
    pub scope: Option<String>,
}

impl Default for LearningSwitches {
    fn default() -> Self {
        LearningSwitches {
            distill_skills: true,
            distill_guards: true,
            knowledge_visible: true,
            planning_only: false,
            kb_writable: true,
            scope: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub episode_id: String,
    pub goal: String,
    pub seed: u64,
    #[serde(default)]
    pub hazard: bool,
    #[serde(default)]
    pub init_commands: Vec<String>,
    pub success_checks: Vec<CheckSpec>,
    #[serde(default)]
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub goal: String,
    pub seed: u64,
    pub success: bool,
    pub steps: u64,
    pub attempts: u32,
    pub replans: u32,
    pub deadlock: bool,
    pub last_reason: Option<FailureReason>,
    pub skill_used: Option<String>,
    pub plans: Vec<PlanSpec>,
    pub doc_ids: Vec<String>,
    pub committed: Vec<String>,
    pub error: Option<String>,
}

impl EpisodeResult {
    fn empty(spec: &EpisodeSpec) -> Self {
        EpisodeResult {
            episode_id: spec.episode_id.clone(),
            goal: spec.goal.clone(),
            seed: spec.seed,
            success: false,
            steps: 0,
            attempts: 0,
            replans: 0,
            deadlock: false,
            last_reason: None,
            skill_used: None,
            plans: Vec::new(),
            doc_ids: Vec::new(),
            committed: Vec::new(),
            error: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttemptOutcome {
    pub trace: AttemptTrace,
    pub monitor_result: bool,
    pub monitor_ever_true: bool,
    pub timed_out: bool,
    pub early_stop: bool,
    pub steps: u64,
}

fn station_reachable(world: &World, st: Station, rules: &NavRules) -> bool {
    let Some(block) = st.block() else { return true };
    if world.grid.positions_of(block).is_empty() {
        return false;
    }
    let goal = |q| nav::reachable_blocks(q).any(|b| world.grid.get(b) == block);
    goal(world.agent.pos) || nav::find_path(&world.grid, world.agent.pos, rules, &goal).is_some()
}

/// Inventory plus whatever sits inside placed furnaces.
pub fn available_items(world: &World) -> crate::model::Inventory {
    let mut inv = world.inventory.clone();
    for (item, n) in stored_items(world) {
        *inv.entry(item).or_default() += n;
    }
    inv
}

/// Contents of placed furnaces.
pub fn stored_items(world: &World) -> crate::model::Inventory {
    let mut inv = crate::model::Inventory::new();
    for f in world.furnaces.values() {
        for (item, n) in [(&f.input, f.input_count), (&f.fuel, f.fuel_count), (&f.output, f.output_count)] {
            if let Some(i) = item {
                *inv.entry(i.clone()).or_default() += n;
            }
        }
    }
    inv
}

/// Stations placed in the world that the agent can walk to.
pub fn placed_stations(world: &World) -> Vec<String> {
    [Station::Table, Station::Furnace]
        .into_iter()
        .filter(|st| station_reachable(world, *st, &NavRules::default()))
        .filter_map(|st| st.item().map(str::to_string))
        .collect()
}

fn retreat(world: &mut World, trace: &mut AttemptTrace, max: usize) -> u64 {
    let grid = world.grid.clone();
    let Some((_, path)) = nav::find_path(&grid, world.agent.pos, &NavRules::default(), &|q| !grid.near_lava(q)) else {
        return 0;
    };
    let mut n = 0;
    for a in path.into_iter().take(max) {
        let rec = world.step(&a);
        trace.push(TraceStep::from(&rec));
        n += 1;
        if rec.terminated {
            trace.env_terminated = true;
            break;
        }
    }
    n
}

/// Run one attempt at `sg` from the world's current state, for at most
/// `max_steps` ticks on top of the subgoal's own timeout.
pub fn execute_subgoal(
    world: &mut World,
    episode_id: &str,
    sg: &SubgoalSpec,
    rules: &NavRules,
    cfg: &ControllerConfig,
    max_steps: u64,
) -> Result<AttemptOutcome, SchemaError> {
    let monitor = compile_checks(&sg.checks)?;
    let mut trace = AttemptTrace::new(TraceStep::from(&world.snapshot(episode_id)));
    let limit = (sg.timeout_s as u64 * TICKS_PER_SECOND).min(max_steps);
    let mut out = AttemptOutcome {
        trace: trace.clone(),
        monitor_result: false,
        monitor_ever_true: false,
        timed_out: false,
        early_stop: false,
        steps: 0,
    };
    let stop = |t: &mut AttemptTrace, w: &mut World, steps: &mut u64| {
        let rec = w.step(&Action::Noop);
        t.push(TraceStep::from(&rec));
        *steps += 1;
    };

    let recipes = world.recipes().clone();
    if let Some(m) =
        missing_requirement(sg, &available_items(world), &recipes, |st| station_reachable(world, st, rules))
    {
        trace.missing_requirement = Some(m);
        stop(&mut trace, world, &mut out.steps);
        out.trace = trace;
        return Ok(out);
    }

    let mut exec = Executor::for_subgoal(sg, world, rules.clone());
    let mut streak = 0u32;
    let mut finished = false;
    while out.steps < limit {
        let action = match exec.next(world) {
            Step::Act(a) => a,
            Step::Missing(m) => {
                trace.missing_requirement = Some(m);
                break;
            }
            Step::Done if finished => break,
            Step::Done => {
                finished = true;
                Action::Noop
            }
        };
        let rec = world.step(&action);
        trace.push(TraceStep::from(&rec));
        out.steps += 1;
        if rec.terminated {
            trace.env_terminated = true;
            break;
        }
        if rec.rejected {
            trace.action_rejected = true;
            break;
        }
        if rec.damaged && cfg.risk_abort_health.is_some_and(|h| rec.health <= h) {
            trace.risk_abort = true;
            out.steps += retreat(world, &mut trace, cfg.retreat_steps);
            break;
        }
        if monitor.eval(&world.snapshot(episode_id)) {
            out.monitor_ever_true = true;
            streak += 1;
            if streak >= cfg.confirm_steps.max(1) {
                out.monitor_result = true;
                break;
            }
        } else {
            streak = 0;
            if finished {
                break;
            }
        }
        if sg.mode == crate::model::Mode::Move
            && exec.phase() != Phase::Working
            && trace.steps.len() > cfg.stagnation.window_k
            && detect_stagnation(&trace, &cfg.stagnation).unwrap_or(false)
        {
            out.early_stop = true;
            break;
        }
    }
    out.timed_out = !out.monitor_result && out.steps >= limit;
    if trace.steps.len() < 2 {
        stop(&mut trace, world, &mut out.steps);
    }
    out.trace = trace;
    Ok(out)
}

/// True once the trailing run of failed attempts reaches `k_tol`.
pub fn should_replan(outcomes: &[bool], k_tol: usize) -> bool {
    outcomes.iter().rev().take_while(|o| !**o).count() >= k_tol.max(1)
}

/// Skills and guards the planner may see under `switches`.
pub fn visible_knowledge(kb: &KnowledgeBase, switches: &LearningSwitches) -> (Vec<Skill>, Vec<Guardrail>) {
    if !switches.knowledge_visible || switches.planning_only {
        return (Vec::new(), Vec::new());
    }
    let scope = switches.scope.as_deref().map(group_scope).unwrap_or_else(|| GLOBAL_SCOPE.to_string());
    (kb.skills_in_scope(&scope).cloned().collect(), kb.guardrails_in_scope(&scope).cloned().collect())
}

/// Fresh world for an episode: terrain from the seed, then init commands.
pub fn episode_world(spec: &EpisodeSpec) -> Result<World, crate::sim::commands::CommandError> {
    let (mut world, _) = generate(spec.seed, TerrainConfig { hazard: spec.hazard });
    apply_all(&mut world, &spec.init_commands)?;
    Ok(world)
}

struct Episode<'a> {
    spec: &'a EpisodeSpec,
    cfg: &'a ControllerConfig,
    switches: &'a LearningSwitches,
    store: &'a mut ExperienceStore,
    kb: &'a mut KnowledgeBase,
    events: &'a mut dyn EventSink,
    overlay: Vec<Guardrail>,
    result: EpisodeResult,
}

impl Episode<'_> {
    fn request(&self, world: &World, mode: RequestMode, pending: Vec<String>) -> PlannerRequest {
        let state = world.snapshot(&self.spec.episode_id);
        let (skills, mut guardrails) = visible_knowledge(self.kb, self.switches);
        let capsule = if self.switches.knowledge_visible && !self.switches.planning_only {
            let ctx = RecallContext::from_snapshot(&self.spec.goal, &state, pending);
            recall_topk(&ctx, self.store, self.kb, &self.cfg.recall)
        } else {
            MemoryCapsule::default()
        };
        if self.switches.knowledge_visible && !self.switches.planning_only {
            for g in &self.overlay {
                if !guardrails.iter().any(|h| h.dedup_key() == g.dedup_key()) {
                    guardrails.push(g.clone());
                }
            }
        }
        PlannerRequest {
            plan_id: format!("p_{}_{:02}", self.spec.episode_id, self.result.plans.len() + 1),
            goal: self.spec.goal.clone(),
            mode,
            state,
            init_commands: self.spec.init_commands.clone(),
            placed_stations: placed_stations(world),
            stored_items: stored_items(world),
            capsule,
            skills,
            guardrails,
        }
    }

    fn commit(&mut self, item: Knowledge) {
        if !self.switches.kb_writable {
            return;
        }
        let kind = match &item {
            Knowledge::Skill(_) => "skill",
            Knowledge::Guardrail(_) => "guardrail",
        };
        if let Ok(id) = self.kb.commit(item, self.spec.group.as_deref()) {
            self.events.emit(Event::Commit {
                episode_id: self.spec.episode_id.clone(),
                kind: kind.into(),
                id: id.clone(),
            });
            self.result.committed.push(id);
        }
    }
}

/// Plan and run one episode to success, deadlock, death or budget exhaustion.
pub fn run_episode(
    spec: &EpisodeSpec,
    cfg: &ControllerConfig,
    switches: &LearningSwitches,
    planner: &mut dyn Planner,
    store: &mut ExperienceStore,
    kb: &mut KnowledgeBase,
    events: &mut dyn EventSink,
) -> EpisodeResult {
    let result = EpisodeResult::empty(spec);
    let mut ep = Episode { spec, cfg, switches, store, kb, events, overlay: Vec::new(), result };
    ep.events.emit(Event::EpisodeStart {
        episode_id: spec.episode_id.clone(),
        goal: spec.goal.clone(),
        seed: spec.seed,
    });
    let mut world = match episode_world(spec) {
        Ok(w) => w,
        Err(e) => {
            ep.result.error = Some(e.to_string());
            return ep.finish(Vec::new(), None);
        }
    };
    run_in_world(&mut ep, &mut world, planner)
}

/// Like [`run_episode`], but in a caller-built world that is left in its
/// final state.
pub fn run_episode_in(
    world: &mut World,
    spec: &EpisodeSpec,
    cfg: &ControllerConfig,
    switches: &LearningSwitches,
    planner: &mut dyn Planner,
    store: &mut ExperienceStore,
    kb: &mut KnowledgeBase,
    events: &mut dyn EventSink,
) -> EpisodeResult {
    let result = EpisodeResult::empty(spec);
    let mut ep = Episode { spec, cfg, switches, store, kb, events, overlay: Vec::new(), result };
    ep.events.emit(Event::EpisodeStart {
        episode_id: spec.episode_id.clone(),
        goal: spec.goal.clone(),
        seed: spec.seed,
    });
    run_in_world(&mut ep, world, planner)
}

impl Episode<'_> {
    fn finish(&mut self, tuples: Vec<ExperienceTuple>, plan: Option<&PlanSpec>) -> EpisodeResult {
        let ep = self;
        let learn = !ep.switches.planning_only;
        if ep.result.success && learn && ep.switches.distill_skills {
            let good: Vec<ExperienceTuple> = tuples.iter().filter(|t| t.outcome()).cloned().collect();
            if let Ok(skill) = distill_skill(&good, &ep.spec.goal) {
                ep.commit(Knowledge::Skill(skill));
            }
        }
        if !ep.result.success && learn && ep.switches.distill_guards && ep.result.error.is_none() {
            if let Some(plan) = plan {
                let recipes = crate::sim::RecipeGraph::shipped();
                if let Some(g) = distill_task_guardrail(&tuples, &ep.spec.goal, plan, &recipes) {
                    ep.commit(Knowledge::Guardrail(g));
                }
            }
        }
        if let Some(name) = ep.result.skill_used.clone() {
            if ep.switches.kb_writable {
                ep.kb.note_skill_use(&name, ep.result.success);
            }
        }
        ep.events.emit(Event::EpisodeEnd { result: Box::new(ep.result.clone()) });
        ep.result.clone()
    }
}

fn run_in_world(ep: &mut Episode<'_>, world: &mut World, planner: &mut dyn Planner) -> EpisodeResult {
    let spec = ep.spec;
    let cfg = ep.cfg;
    for _ in 0..cfg.warmup_noops {
        world.step(&Action::Noop);
    }
    world.mark_attempt();
    let start_tick = world.tick;
    let task_monitor = match compile_checks(&spec.success_checks) {
        Ok(m) => m,
        Err(e) => {
            ep.result.error = Some(e.to_string());
            return ep.finish(Vec::new(), None);
        }
    };

    let mut tuples: Vec<ExperienceTuple> = Vec::new();
    let mut plan = match plan_with(ep, world, planner, RequestMode::Initial, Vec::new()) {
        Some(p) => p,
        None => return ep.finish(tuples, None),
    };
    let visible = visible_knowledge(ep.kb, ep.switches).0;
    ep.result.skill_used = visible
        .iter()
        .find(|s| s.steps.iter().map(|x| &x.condition).eq(plan.subgoals.iter().map(|x| &x.condition)))
        .map(|s| s.name.clone());

    let mut idx = 0usize;
    let mut fail_run: Vec<ExperienceTuple> = Vec::new();
    let mut attempt_index = 0u32;
    loop {
        let used = world.tick - start_tick;
        if used >= cfg.step_budget {
            break;
        }
        if idx >= plan.subgoals.len() {
            if task_monitor.eval(&world.snapshot(&spec.episode_id)) {
                ep.result.success = true;
                break;
            }
            if ep.switches.planning_only || ep.result.replans >= cfg.replan_budget {
                ep.result.deadlock = !ep.switches.planning_only;
                break;
            }
            ep.result.replans += 1;
            let mode = RequestMode::Replan { remaining_goal: spec.goal.clone(), failed_condition: String::new() };
            match plan_with(ep, world, planner, mode, Vec::new()) {
                Some(p) => plan = p,
                None => break,
            }
            idx = 0;
            continue;
        }
        let sg = plan.subgoals[idx].clone();
        let rules = NavRules::from_constraints(&plan.global_constraints);
        let pre = world.snapshot(&spec.episode_id);
        match compile_checks(&sg.checks) {
            Ok(m) if m.eval(&pre) => {
                ep.events.emit(Event::Skip { episode_id: spec.episode_id.clone(), subgoal_id: sg.subgoal_id.clone() });
                idx += 1;
                continue;
            }
            Ok(_) => {}
            Err(e) => {
                ep.result.error = Some(e.to_string());
                break;
            }
        }
        let outcome = match execute_subgoal(world, &spec.episode_id, &sg, &rules, cfg, cfg.step_budget - used) {
            Ok(o) => o,
            Err(e) => {
                ep.result.error = Some(e.to_string());
                break;
            }
        };
        let post = world.snapshot(&spec.episode_id);
        ep.result.attempts += 1;
        attempt_index += 1;
        let diag = match diagnose(
            &pre,
            &post,
            &sg,
            &outcome.trace,
            outcome.monitor_result,
            outcome.monitor_ever_true,
            outcome.timed_out,
            &cfg.stagnation,
        ) {
            Ok(d) => d,
            Err(e) => {
                ep.result.error = Some(e.to_string());
                break;
            }
        };
        let mut tuple = ExperienceTuple {
            doc_id: String::new(),
            episode_id: spec.episode_id.clone(),
            attempt_index,
            s_pre: pre,
            action: sg.clone(),
            diagnosis: diag,
            s_post: post,
        };
        match ep.store.append(tuple.clone()) {
            Ok(id) => {
                tuple.doc_id = id.clone();
                ep.result.doc_ids.push(id);
            }
            Err(e) => {
                ep.result.error = Some(e.to_string());
                break;
            }
        }
        world.mark_attempt();
        ep.events.emit(Event::Attempt {
            episode_id: spec.episode_id.clone(),
            doc_id: tuple.doc_id.clone(),
            subgoal_id: sg.subgoal_id.clone(),
            condition: sg.condition.clone(),
            success: tuple.outcome(),
            reason: tuple.diagnosis.failure_reason,
            steps: outcome.steps,
        });
        let reason = tuple.diagnosis.failure_reason;
        tuples.push(tuple.clone());
        if tuple.outcome() {
            fail_run.clear();
            idx += 1;
            continue;
        }
        ep.result.last_reason = reason;
        if ep.switches.planning_only {
            break;
        }
        fail_run.push(tuple);
        let dead = outcome.trace.env_terminated || world.terminated;
        let streak: Vec<bool> = fail_run.iter().map(|t| t.outcome()).collect();
        if !should_replan(&streak, cfg.k_tol) {
            if dead {
                break;
            }
            continue;
        }
        if ep.switches.distill_guards {
            if let Ok(Some(g)) = distill_subgoal_guardrail(&fail_run, cfg.k_tol) {
                if !ep.overlay.iter().any(|h| h.dedup_key() == g.dedup_key()) {
                    ep.overlay.push(g.clone());
                }
                ep.commit(Knowledge::Guardrail(g));
            }
        }
        fail_run.clear();
        if dead {
            break;
        }
        if ep.result.replans >= cfg.replan_budget {
            ep.result.deadlock = true;
            break;
        }
        ep.result.replans += 1;
        let pending: Vec<String> = plan.subgoals[idx..].iter().map(|s| s.condition.clone()).collect();
        let mode = RequestMode::Replan { remaining_goal: spec.goal.clone(), failed_condition: sg.condition.clone() };
        match plan_with(ep, world, planner, mode, pending) {
            Some(p) => plan = p,
            None => break,
        }
        idx = 0;
    }
    ep.result.steps = world.tick - start_tick;
    let last_plan = plan.clone();
    ep.finish(tuples, Some(&last_plan))
}

fn plan_with(
    ep: &mut Episode<'_>,
    world: &World,
    planner: &mut dyn Planner,
    mode: RequestMode,
    pending: Vec<String>,
) -> Option<PlanSpec> {
    let req = ep.request(world, mode, pending);
    match planner.plan(&req) {
        Ok(p) => {
            ep.events.emit(Event::Plan { episode_id: ep.spec.episode_id.clone(), plan: p.clone() });
            ep.result.plans.push(p.clone());
            Some(p)
        }
        Err(e) => {
            ep.result.error = Some(e.to_string());
            None
        }
    }
}
