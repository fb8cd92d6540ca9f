mod common;

use proptest::prelude::*;

use voxmem::controller::{run_episode, ControllerConfig, EpisodeSpec, LearningSwitches, NullSink};
use voxmem::distill::yaml::{failures_from_yaml, failures_to_yaml, skills_from_yaml, skills_to_yaml};
use voxmem::distill::{
    distill_skill, distill_subgoal_guardrail, distill_task_guardrail, dominant_reason, glob_match, goal_pattern,
    match_guardrails, parse_goal, DistillError, GuardLevel, Knowledge, KnowledgeBase, MatchContext,
};
use voxmem::harness::tasks::find_task;
use voxmem::model::{ExperienceTuple, FailureReason, PlanSpec, TaskKind};
use voxmem::planner::{PlannerFaults, ScriptedPlanner};
use voxmem::recall::condition_hash;
use voxmem::sim::RecipeGraph;
use voxmem::store::ExperienceStore;

fn episode(task: &str, seed: u64, faults: PlannerFaults) -> (Vec<ExperienceTuple>, PlanSpec, bool) {
    let t = find_task(task).unwrap();
    let spec = EpisodeSpec {
        episode_id: format!("{task}_{seed}"),
        goal: t.goal,
        seed,
        hazard: false,
        init_commands: t.init_commands,
        success_checks: t.success_checks,
        group: Some(t.group),
    };
    let mut store = ExperienceStore::in_memory(256);
    let mut kb = KnowledgeBase::new();
    let mut p = ScriptedPlanner::new(RecipeGraph::shipped(), faults);
    let switches = LearningSwitches { distill_skills: false, distill_guards: false, ..Default::default() };
    let r = run_episode(&spec, &ControllerConfig::default(), &switches, &mut p, &mut store, &mut kb, &mut NullSink);
    let tuples = r.doc_ids.iter().map(|d| store.get_document(d).unwrap().clone()).collect();
    (tuples, r.plans.last().unwrap().clone(), r.success)
}

fn failures(n: usize, seed: u64) -> Vec<ExperienceTuple> {
    let mut r = common::rng(seed);
    let mut clock = 0;
    let mut out: Vec<ExperienceTuple> = Vec::new();
    while out.len() < n {
        let mut t = common::random_tuple(&mut r, "ep", out.len() as u32 + 1, &mut clock);
        if t.outcome() {
            continue;
        }
        if let Some(f) = out.first() {
            t.action = f.action.clone();
        }
        out.push(t);
    }
    out
}

#[test]
fn goals_parse_to_registry_items() {
    let g = parse_goal("gather 3 oak_log").unwrap();
    assert_eq!((g.verb.as_str(), g.count, g.item.as_str()), ("gather", 3, "oak_log"));
    assert_eq!(parse_goal("craft an iron pickaxe").unwrap().item, "iron_pickaxe");
    assert_eq!(parse_goal("Craft 4 Planks").unwrap().item, "plank");
    assert!(parse_goal("dance wildly").is_none());
}

#[test]
fn goal_patterns_generalize_materials() {
    assert_eq!(goal_pattern("craft wooden_pickaxe"), "craft *_pickaxe");
    assert!(glob_match("craft *_pickaxe", "craft stone_pickaxe"));
    assert!(!glob_match("craft *_pickaxe", "craft furnace"));
    assert!(glob_match("*", ""));
    assert!(!glob_match("a*b", "ac"));
}

#[test]
fn dominant_reason_breaks_ties_by_priority() {
    use FailureReason::*;
    assert_eq!(dominant_reason([Timeout, Timeout, NavStuck]), Some(Timeout));
    let tie = dominant_reason([Timeout, EnvTerminated]).unwrap();
    assert!(tie.priority() <= Timeout.priority().min(EnvTerminated.priority()));
    assert_eq!(dominant_reason([]), None);
}

#[test]
fn skill_from_a_successful_episode() {
    let (tuples, _, ok) = episode("craft_wooden_pickaxe", 2, PlannerFaults::default());
    assert!(ok);
    let good: Vec<_> = tuples.iter().filter(|t| t.outcome()).cloned().collect();
    let skill = distill_skill(&good, "craft wooden_pickaxe").unwrap();
    assert_eq!(skill.steps.len(), good.len());
    assert!(skill.steps.iter().enumerate().all(|(i, s)| s.subgoal_id == format!("sg_{:03}", i + 1)));
    assert!(skill.steps.iter().flat_map(|s| &s.checks).all(|c| c.target.is_none()));
    assert_eq!(skill.effects.get("wooden_pickaxe"), Some(&1));
    assert_eq!(skill.provenance.len(), good.len());
    skill.validate().unwrap();
}

#[test]
fn skills_refuse_failures_and_empty_input() {
    assert_eq!(distill_skill(&[], "craft furnace"), Err(DistillError::Empty));
    let f = failures(2, 1);
    assert!(matches!(distill_skill(&f, "craft furnace"), Err(DistillError::FailedTuple(_))));
}

#[test]
fn subgoal_guard_needs_a_homogeneous_failure_run() {
    let run = failures(3, 2);
    let g = distill_subgoal_guardrail(&run, 3).unwrap().unwrap();
    assert_eq!(g.level, GuardLevel::Subgoal);
    assert_eq!(g.forbid.as_deref(), Some(run[0].action.condition.as_str()));
    assert_eq!(g.trigger.cond_sig, Some(condition_hash(run[0].action.task_kind, &run[0].action.condition)));
    assert_eq!(g.provenance.len(), 3);
    assert_eq!(distill_subgoal_guardrail(&run, 4).unwrap(), None);

    let mut mixed = run.clone();
    mixed[1].action.condition = "something else entirely".into();
    assert_eq!(distill_subgoal_guardrail(&mixed, 2), Err(DistillError::MixedConditions));
    let mut other = run.clone();
    other[2].episode_id = "elsewhere".into();
    assert_eq!(distill_subgoal_guardrail(&other, 2), Err(DistillError::MixedEpisodes));
}

#[test]
fn task_guard_names_the_missing_station() {
    let (tuples, plan, ok) =
        episode("craft_wooden_pickaxe", 0, PlannerFaults { omit_stations: true, ..Default::default() });
    assert!(!ok);
    let g = distill_task_guardrail(&tuples, "craft wooden_pickaxe", &plan, &RecipeGraph::shipped()).unwrap();
    assert_eq!(g.level, GuardLevel::Task);
    let req = g.require.as_ref().unwrap();
    assert_eq!(req[0].condition, "craft crafting_table");
    assert_eq!(g.trigger.goal_pattern.as_deref(), Some("craft *_pickaxe"));
    let ctx = MatchContext::for_goal("craft stone_pickaxe");
    assert_eq!(match_guardrails([&g], &ctx).len(), 1);
    assert!(match_guardrails([&g], &MatchContext::for_goal("craft furnace")).is_empty());
}

#[test]
fn commits_dedupe_and_version() {
    let mut kb = KnowledgeBase::new();
    let g = distill_subgoal_guardrail(&failures(2, 3), 2).unwrap().unwrap();
    let id = kb.commit(Knowledge::Guardrail(g.clone()), Some("wooden")).unwrap();
    assert_eq!(kb.version, 1);
    assert_eq!(kb.commit(Knowledge::Guardrail(g.clone()), Some("wooden")).unwrap(), id);
    assert_eq!((kb.version, kb.guardrails.len()), (1, 1));
    kb.commit(Knowledge::Guardrail(g), Some("stone")).unwrap();
    assert_eq!((kb.version, kb.guardrails.len()), (2, 1));
    assert_eq!(kb.guardrails_in_scope("group:stone").count(), 1);
    let mut bad = kb.guardrails[0].clone();
    bad.require = Some(Vec::new());
    assert!(kb.commit(Knowledge::Guardrail(bad), None).is_err());
}

#[test]
fn skill_name_collisions_get_suffixes() {
    let (tuples, _, _) = episode("craft_planks", 1, PlannerFaults::default());
    let good: Vec<_> = tuples.into_iter().filter(|t| t.outcome()).collect();
    let a = distill_skill(&good, "craft 4 plank").unwrap();
    let mut b = a.clone();
    b.steps[0].task_kind = TaskKind::Use;
    let mut kb = KnowledgeBase::new();
    let first = kb.commit(Knowledge::Skill(a), None).unwrap();
    let second = kb.commit(Knowledge::Skill(b), None).unwrap();
    assert_eq!(second, format!("{first}_2"));
}

#[test]
fn yaml_cards_round_trip() {
    let mut kb = KnowledgeBase::new();
    for (task, goal) in [("craft_wooden_pickaxe", "craft wooden_pickaxe"), ("smelt_iron_ingot", "smelt iron_ingot")] {
        let (tuples, _, ok) = episode(task, 4, PlannerFaults::default());
        assert!(ok, "{task}");
        let good: Vec<_> = tuples.into_iter().filter(|t| t.outcome()).collect();
        kb.commit(Knowledge::Skill(distill_skill(&good, goal).unwrap()), None).unwrap();
    }
    kb.commit(Knowledge::Guardrail(distill_subgoal_guardrail(&failures(2, 5), 2).unwrap().unwrap()), None).unwrap();
    let (tuples, plan, _) =
        episode("craft_wooden_pickaxe", 0, PlannerFaults { omit_stations: true, ..Default::default() });
    let tg = distill_task_guardrail(&tuples, "craft wooden_pickaxe", &plan, &RecipeGraph::shipped()).unwrap();
    kb.commit(Knowledge::Guardrail(tg), None).unwrap();

    let skills = skills_from_yaml(&skills_to_yaml(&kb)).unwrap();
    assert_eq!(skills.len(), kb.skills.len());
    for (a, b) in skills.iter().zip(&kb.skills) {
        assert_eq!((&a.name, &a.goal, &a.steps, &a.success_checks), (&b.name, &b.goal, &b.steps, &b.success_checks));
    }
    let guards = failures_from_yaml(&failures_to_yaml(&kb)).unwrap();
    for (a, b) in guards.iter().zip(&kb.guardrails) {
        assert_eq!(
            (&a.guard_id, a.level, &a.trigger, &a.forbid, &a.require),
            (&b.guard_id, b.level, &b.trigger, &b.forbid, &b.require)
        );
    }
}

#[test]
fn hand_written_cards_are_accepted() {
    let skills = skills_from_yaml(
        "- name: collect_wood\n  goal: gather 3 oak_log\n  steps: [mine oak_log]\n  checks: [inv_ge oak_log 3]\n",
    )
    .unwrap();
    assert_eq!(skills[0].steps[0].task_kind, TaskKind::Mine);
    let guards = failures_from_yaml("- symptom: stuck near lava\n  guardrail: [avoid lava pools]\n").unwrap();
    assert_eq!(guards[0].forbid.as_deref(), Some("avoid lava pools"));
    assert!(skills_from_yaml("- name: x\n  goal: y\n  steps: []\n").is_err());
    assert!(skills_from_yaml(": not yaml [").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn guards_appear_exactly_at_threshold(n in 1usize..8, k in 1usize..8, seed in any::<u64>()) {
        let run = failures(n, seed);
        let g = distill_subgoal_guardrail(&run, k).unwrap();
        prop_assert_eq!(g.is_some(), n >= k);
    }

    #[test]
    fn glob_star_matches_any_infix(a in "[a-z_]{0,6}", mid in "[a-z_]{0,6}", b in "[a-z_]{0,6}") {
        let text = format!("{a}{mid}{b}");
        let pattern = format!("{a}*{b}");
        prop_assert!(glob_match(&pattern, &text));
    }
}
