#![allow(clippy::type_complexity)]

use std::collections::BTreeSet;

use voxmem::distill::KnowledgeBase;
use voxmem::harness::tasks::{parse_suite, shipped_tasks};
use voxmem::harness::{curriculum_run, render_table, run, Ablation, Backend, EventLogs, RunConfig, Strategy};
use voxmem::planner::{PlannerFaults, ScriptedPlanner};
use voxmem::sim::RecipeGraph;
use voxmem::store::ExperienceStore;

fn small(strategy: Strategy) -> RunConfig {
    RunConfig {
        seeds: vec![0, 1],
        tasks: vec!["craft_planks".into(), "craft_wooden_pickaxe".into()],
        strategy,
        episodes: 8,
        checkpoints: vec![50, 100],
        store_window: 16,
        ..Default::default()
    }
}

fn go(cfg: &RunConfig) -> (voxmem::harness::Report, ExperienceStore, KnowledgeBase) {
    let mut store = ExperienceStore::in_memory(cfg.store_window);
    let mut kb = KnowledgeBase::new();
    let report = run(cfg, &mut store, &mut kb, &EventLogs::Discard).unwrap();
    (report, store, kb)
}

#[test]
fn overrides_accept_aliases_and_paths() {
    let mut cfg = RunConfig::default();
    cfg.set("k_tol", "5").unwrap();
    cfg.set("controller.recall.alpha", "0.5").unwrap();
    cfg.set("seeds", "[3, 4]").unwrap();
    cfg.set("omit_stations", "true").unwrap();
    cfg.set("strategy", "cold_start").unwrap();
    cfg.set("ablations", "[no_guard_distill]").unwrap();
    assert_eq!(cfg.controller.k_tol, 5);
    assert_eq!(cfg.controller.recall.alpha, 0.5);
    assert_eq!(cfg.seeds, vec![3, 4]);
    assert!(cfg.planner.faults.omit_stations);
    assert_eq!(cfg.strategy, Strategy::ColdStart);
    assert_eq!(cfg.ablations, BTreeSet::from([Ablation::NoGuardDistill]));
}

#[test]
fn bad_overrides_leave_the_config_alone() {
    let mut cfg = RunConfig::default();
    let before = cfg.clone();
    assert!(cfg.set("no_such_key", "1").is_err());
    assert!(cfg.set("controller.nope", "1").is_err());
    assert!(cfg.set("k_tol", "many").is_err());
    assert!(cfg.set("strategy", "chaos").is_err());
    assert_eq!(cfg, before);
}

#[test]
fn config_files_parse_and_validate() {
    let cfg =
        RunConfig::from_text("seeds: [1, 2]\nstrategy: mixed_sampling\nepisodes: 6\nplanner:\n  backend: scripted\n")
            .unwrap();
    assert_eq!(cfg.strategy, Strategy::MixedSampling);
    assert_eq!(cfg.planner.backend, Backend::Scripted);
    cfg.validate().unwrap();
    assert!(RunConfig::from_text("seeds: [1]\nbogus: true\n").is_err());
    assert!(RunConfig::from_text("seeds: nope").is_err());
}

#[test]
fn validation_names_the_offending_field() {
    let cases: Vec<(fn(&mut RunConfig), &str)> = vec![
        (|c| c.seeds.clear(), "seeds"),
        (|c| c.heldout_seeds = vec![0], "heldout_seeds"),
        (|c| c.store_window = 0, "store_window"),
        (|c| c.controller.k_tol = 0, "k_tol"),
        (|c| c.checkpoints = vec![0], "checkpoints"),
        (|c| c.checkpoints = vec![101], "checkpoints"),
        (|c| c.tasks = vec!["fly_to_moon".into()], "fly_to_moon"),
        (
            |c| {
                c.strategy = Strategy::PretrainFreeze;
                c.hard_pool.clear();
            },
            "pool",
        ),
        (
            |c| {
                c.strategy = Strategy::MixedSampling;
                c.episodes = 0;
            },
            "episodes",
        ),
    ];
    for (mutate, needle) in cases {
        let mut cfg = RunConfig::default();
        mutate(&mut cfg);
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains(needle), "{needle}: {e}");
    }
}

#[test]
fn sweep_covers_every_task_seed_pair() {
    let cfg = small(Strategy::SelfLearning);
    let (report, store, kb) = go(&cfg);
    assert_eq!(report.episodes.len(), 4);
    assert_eq!(report.overall.runs, 4);
    assert_eq!(report.per_task.len(), 2);
    assert_eq!(report.checkpoints.len(), 2);
    assert_eq!(report.checkpoints[1].after_episodes, 4);
    assert_eq!(report.checkpoints[0].heldout.runs as usize, 2 * cfg.heldout_seeds.len());
    assert_eq!(report.store_documents, store.len());
    assert_eq!(report.kb_final.version, kb.version);
    assert_eq!(report.kb_growth.len(), 4);
    assert!(report.kb_growth.windows(2).all(|w| w[0] <= w[1]));
    assert!(render_table(&report).contains("craft_planks"));
}

#[test]
fn cold_start_never_writes_knowledge() {
    let mut cfg = small(Strategy::ColdStart);
    cfg.planner.faults = PlannerFaults { omit_stations: true, ..Default::default() };
    let (report, _, kb) = go(&cfg);
    assert!(kb.is_empty());
    assert!(report.episodes.iter().all(|e| e.committed.is_empty()));
}

#[test]
fn ablations_switch_off_their_component() {
    let mut cfg = small(Strategy::SelfLearning);
    cfg.ablations = BTreeSet::from([Ablation::NoSkillDistill]);
    let (_, _, kb) = go(&cfg);
    assert!(kb.skills.is_empty());

    cfg.ablations = BTreeSet::from([Ablation::NoGuardDistill]);
    cfg.planner.faults.omit_stations = true;
    let (_, _, kb) = go(&cfg);
    assert!(kb.guardrails.is_empty());

    cfg.ablations = BTreeSet::from([Ablation::PlanningOnly]);
    let (report, _, kb) = go(&cfg);
    assert!(kb.is_empty());
    assert!(report.episodes.iter().all(|e| e.replans == 0));
}

#[test]
fn pretrain_then_freeze() {
    let cfg = small(Strategy::PretrainFreeze);
    let (report, _, _) = go(&cfg);
    let phases: Vec<&str> = report.episodes.iter().map(|e| e.phase.as_str()).collect();
    assert_eq!(phases, ["pretrain"; 4].into_iter().chain(["frozen"; 4]).collect::<Vec<_>>());
    let frozen = &report.episodes[4..];
    assert!(frozen.iter().all(|e| e.committed.is_empty()));
    assert!(frozen.iter().all(|e| e.kb_version == report.episodes[3].kb_version));
    let hard: BTreeSet<&str> = cfg.hard_pool.iter().map(String::as_str).collect();
    assert!(frozen.iter().all(|e| hard.contains(e.task.as_str())));
}

#[test]
fn mixed_sampling_alternates_pools() {
    let cfg = small(Strategy::MixedSampling);
    let (report, _, _) = go(&cfg);
    for (i, e) in report.episodes.iter().enumerate() {
        let (phase, pool) = if i % 2 == 0 { ("easy", &cfg.easy_pool) } else { ("hard", &cfg.hard_pool) };
        assert_eq!(e.phase, phase);
        assert!(pool.contains(&e.task));
    }
}

#[test]
fn curriculum_entry_refuses_flat_strategies() {
    let cfg = small(Strategy::SelfLearning);
    let mut p = ScriptedPlanner::new(RecipeGraph::shipped(), PlannerFaults::default());
    let mut store = ExperienceStore::in_memory(8);
    let mut kb = KnowledgeBase::new();
    assert!(curriculum_run(&cfg, &mut p, &mut store, &mut kb, &EventLogs::Discard).is_err());
}

#[test]
fn external_backend_without_token_fails_cleanly() {
    let mut cfg = small(Strategy::SelfLearning);
    cfg.planner.backend = Backend::External;
    cfg.planner.external.token_env = "VOXMEM_TEST_HARNESS_TOKEN_UNSET".into();
    let mut store = ExperienceStore::in_memory(8);
    let mut kb = KnowledgeBase::new();
    let e = run(&cfg, &mut store, &mut kb, &EventLogs::Discard).unwrap_err();
    assert!(e.to_string().contains("VOXMEM_TEST_HARNESS_TOKEN_UNSET"));
}

#[test]
fn custom_suites_parse_and_validate() {
    let text = "- name: more_logs\n  group: wooden\n  goal: gather 5 oak_log\n  init_commands: []\n  success_checks:\n    - {type: inv_ge, item: oak_log, n: 5}\n";
    let tasks = parse_suite(text).unwrap();
    assert_eq!(tasks[0].name, "more_logs");
    assert!(tasks[0].step_budget > 0);
    assert!(parse_suite("- name: x\n  group: g\n  goal: g\n  init_commands: []\n  success_checks: []\n").is_err());
    assert!(parse_suite("- name: x\n  group: g\n  goal: craft plank\n  init_commands: [\"/bogus\"]\n  success_checks: [{type: inv_ge, item: plank, n: 1}]\n").is_err());
}

#[test]
fn shipped_tasks_are_valid() {
    let tasks = shipped_tasks();
    assert_eq!(tasks.len(), 8);
    for t in &tasks {
        t.validate().unwrap();
    }
    let groups: BTreeSet<&str> = tasks.iter().map(|t| t.group.as_str()).collect();
    assert_eq!(groups, BTreeSet::from(["iron", "stone", "wooden"]));
}

#[test]
fn event_logs_land_in_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(Strategy::SelfLearning);
    let mut store = ExperienceStore::in_memory(16);
    let mut kb = KnowledgeBase::new();
    let report = run(&cfg, &mut store, &mut kb, &EventLogs::Dir(dir.path().join("events"))).unwrap();
    let n = std::fs::read_dir(dir.path().join("events")).unwrap().count();
    assert_eq!(n, report.episodes.len());
}
