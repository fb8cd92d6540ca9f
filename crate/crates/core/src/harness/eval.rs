use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use super::config::{RunConfig, Strategy};
use super::report::{Checkpoint, EpisodeRow, KbSummary, Rate, Report};
use super::tasks::TaskDef;
use super::HarnessError;
use crate::controller::{run_episode, EpisodeSpec, EventSink, JsonlSink, LearningSwitches, NullSink};
use crate::distill::KnowledgeBase;
use crate::planner::Planner;
use crate::store::ExperienceStore;

/// Where per-episode event transcripts go.
#[derive(Debug, Clone, Default)]
pub enum EventLogs {
    #[default]
    Discard,
    /// One `<episode_id>.jsonl` file per training episode.
    Dir(PathBuf),
}

impl EventLogs {
    fn open(&self, episode_id: &str) -> Result<Box<dyn EventSink>, HarnessError> {
        match self {
            EventLogs::Discard => Ok(Box::new(NullSink)),
            EventLogs::Dir(dir) => {
                fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.clone(), source })?;
                let path = dir.join(format!("{episode_id}.jsonl"));
                let f = File::create(&path).map_err(|source| HarnessError::Io { path, source })?;
                Ok(Box::new(JsonlSink::new(BufWriter::new(f))))
            }
        }
    }
}

struct Slot {
    task: TaskDef,
    seed: u64,
    phase: &'static str,
    switches: LearningSwitches,
}

fn cycle(pool: &[TaskDef], seeds: &[u64], i: usize) -> (TaskDef, u64) {
    (pool[i % pool.len()].clone(), seeds[(i / pool.len()) % seeds.len()])
}

fn schedule(cfg: &RunConfig) -> Result<(Vec<Slot>, Vec<TaskDef>), HarnessError> {
    let base = cfg.switches();
    let slot = |(task, seed): (TaskDef, u64), phase, switches: &LearningSwitches| Slot {
        task,
        seed,
        phase,
        switches: switches.clone(),
    };
    match cfg.strategy {
        Strategy::ColdStart | Strategy::SelfLearning => {
            let suite = cfg.suite()?;
            let mut out = Vec::new();
            for t in &suite {
                for s in &cfg.seeds {
                    out.push(slot((t.clone(), *s), "train", &base));
                }
            }
            Ok((out, suite))
        }
        Strategy::PretrainFreeze => {
            let (easy, hard) = cfg.pools()?;
            let first = cfg.episodes / 2;
            let frozen = LearningSwitches { kb_writable: false, ..base.clone() };
            let mut out: Vec<Slot> = (0..first).map(|i| slot(cycle(&easy, &cfg.seeds, i), "pretrain", &base)).collect();
            out.extend((0..cfg.episodes - first).map(|i| slot(cycle(&hard, &cfg.seeds, i), "frozen", &frozen)));
            Ok((out, hard))
        }
        Strategy::MixedSampling => {
            let (easy, hard) = cfg.pools()?;
            let out = (0..cfg.episodes)
                .map(|i| {
                    if i % 2 == 0 {
                        slot(cycle(&easy, &cfg.seeds, i / 2), "easy", &base)
                    } else {
                        slot(cycle(&hard, &cfg.seeds, i / 2), "hard", &base)
                    }
                })
                .collect();
            Ok((out, hard))
        }
    }
}

fn digest(cfg: &RunConfig) -> String {
    let line = crate::canon::to_line(cfg).expect("config serializes");
    Sha256::digest(line.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn spec_for(episode_id: String, task: &TaskDef, seed: u64, hazard: bool) -> EpisodeSpec {
    EpisodeSpec {
        episode_id,
        goal: task.goal.clone(),
        seed,
        hazard,
        init_commands: task.init_commands.clone(),
        success_checks: task.success_checks.clone(),
        group: Some(task.group.clone()),
    }
}

fn checkpoint_at(percent: u32, total: usize) -> usize {
    ((percent as usize * total).div_ceil(100)).max(1)
}

/// Evaluate the current knowledge on held-out seeds without touching it.
fn evaluate(
    cfg: &RunConfig,
    tasks: &[TaskDef],
    tag: u32,
    planner: &mut dyn Planner,
    store: &ExperienceStore,
    kb: &KnowledgeBase,
) -> (Rate, std::collections::BTreeMap<String, Rate>) {
    let mut scratch_store = store.detached();
    let mut scratch_kb = kb.clone();
    let switches = LearningSwitches { kb_writable: false, ..cfg.switches() };
    let mut overall = Rate::default();
    let mut per_task = std::collections::BTreeMap::new();
    for t in tasks {
        let mut ctl = cfg.controller.clone();
        ctl.step_budget = t.step_budget;
        for s in &cfg.heldout_seeds {
            let spec = spec_for(format!("ck{tag:03}_{}_s{s}", t.name), t, *s, cfg.hazard);
            let r = run_episode(&spec, &ctl, &switches, planner, &mut scratch_store, &mut scratch_kb, &mut NullSink);
            overall.add(r.success);
            per_task.entry(t.name.clone()).or_insert_with(Rate::default).add(r.success);
        }
    }
    (overall, per_task)
}

fn execute(
    cfg: &RunConfig,
    planner: &mut dyn Planner,
    store: &mut ExperienceStore,
    kb: &mut KnowledgeBase,
    logs: &EventLogs,
) -> Result<Report, HarnessError> {
    cfg.validate()?;
    let (slots, eval_tasks) = schedule(cfg)?;
    let kb_start = KbSummary::of(kb);
    let marks: Vec<(u32, usize)> = cfg.checkpoints.iter().map(|p| (*p, checkpoint_at(*p, slots.len()))).collect();
    let mut rows = Vec::with_capacity(slots.len());
    let mut checkpoints = Vec::new();
    for (i, slot) in slots.iter().enumerate() {
        let id = format!("ep{:05}_{}_s{}", i + 1, slot.task.name, slot.seed);
        let spec = spec_for(id.clone(), &slot.task, slot.seed, cfg.hazard);
        let mut ctl = cfg.controller.clone();
        ctl.step_budget = slot.task.step_budget;
        let mut sink = logs.open(&id)?;
        let r = run_episode(&spec, &ctl, &slot.switches, planner, store, kb, sink.as_mut());
        drop(sink);
        rows.push(EpisodeRow::new(i, &slot.task.name, &slot.task.group, slot.phase, &r, kb.version));
        for (p, at) in marks.iter().filter(|(_, at)| *at == i + 1) {
            let (heldout, heldout_per_task) = evaluate(cfg, &eval_tasks, *p, planner, store, kb);
            checkpoints.push(Checkpoint {
                percent: *p,
                after_episodes: *at,
                train: Rate::of(&rows),
                heldout,
                heldout_per_task,
                kb: KbSummary::of(kb),
            });
        }
    }
    Ok(Report::build(
        cfg.strategy,
        cfg.ablations.clone(),
        digest(cfg),
        rows,
        checkpoints,
        kb_start,
        KbSummary::of(kb),
        store.len(),
    ))
}

/// Task x seed sweep under the configured strategy and ablations. Curriculum
/// strategies are routed to [`curriculum_run`].
pub fn run_eval(
    cfg: &RunConfig,
    planner: &mut dyn Planner,
    store: &mut ExperienceStore,
    kb: &mut KnowledgeBase,
    logs: &EventLogs,
) -> Result<Report, HarnessError> {
    execute(cfg, planner, store, kb, logs)
}

/// Two-pool curriculum: pretrain then freeze, or 1:1 mixed sampling.
pub fn curriculum_run(
    cfg: &RunConfig,
    planner: &mut dyn Planner,
    store: &mut ExperienceStore,
    kb: &mut KnowledgeBase,
    logs: &EventLogs,
) -> Result<Report, HarnessError> {
    if !cfg.strategy.is_curriculum() {
        return Err(HarnessError::Config(format!(
            "strategy: curriculum runs need pretrain_freeze or mixed_sampling, got {:?}",
            cfg.strategy
        )));
    }
    execute(cfg, planner, store, kb, logs)
}

/// Build the configured planner and run whatever the strategy calls for.
pub fn run(
    cfg: &RunConfig,
    store: &mut ExperienceStore,
    kb: &mut KnowledgeBase,
    logs: &EventLogs,
) -> Result<Report, HarnessError> {
    cfg.validate()?;
    let mut planner = cfg.planner.build()?;
    execute(cfg, planner.as_mut(), store, kb, logs)
}
