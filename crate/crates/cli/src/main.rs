use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use voxmem::controller::{episode_world, run_episode, EpisodeSpec, EventSink, JsonlSink, NullSink};
use voxmem::distill::yaml::{failures_to_yaml, skills_to_yaml};
use voxmem::distill::KnowledgeBase;
use voxmem::harness::{curriculum_run, render_table, replay_skill, run_eval, EventLogs, RunConfig};
use voxmem::store::ExperienceStore;

#[derive(Parser)]
#[command(name = "voxmem", version, about = "Experience-driven agent loop over a voxel gridworld")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone)]
struct Settings {
    /// YAML or JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Knowledge base file; read when present, written back after learning.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Setting overrides as `--key value` pairs, e.g. `--k_tol 2 --planner.faults.omit_stations true`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Verb {
    /// Run one episode.
    Run {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Store directory.
        #[arg(long, default_value = "store")]
        store: PathBuf,
        /// Event log file (JSONL).
        #[arg(long)]
        events: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Task x seed sweep; writes report.json, report.txt, store/ and events/ under --out.
    Eval {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Two-pool curriculum run (pretrain_freeze or mixed_sampling).
    Curriculum {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Summarize a store or print one document.
    InspectStore {
        #[arg(long, default_value = "store")]
        store: PathBuf,
        #[arg(long)]
        doc: Option<String>,
        /// Only entries of this episode.
        #[arg(long)]
        episode: Option<String>,
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Write skills.yaml and failures.yaml from a knowledge base.
    ExportKnowledge {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Re-execute a stored skill from a fresh reset.
    Replay {
        #[arg(long)]
        skill: String,
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        settings: Settings,
    },
}

type Res<T> = Result<T, String>;

fn load_config(s: &Settings) -> Res<RunConfig> {
    let mut cfg = match &s.config {
        Some(p) => RunConfig::load(p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    let mut it = s.overrides.iter();
    while let Some(flag) = it.next() {
        let (key, value) = match flag.strip_prefix("--") {
            Some(k) if k.contains('=') => {
                let (k, v) = k.split_once('=').expect("checked");
                (k.to_string(), v.to_string())
            }
            Some(k) => {
                let v = it.next().ok_or_else(|| format!("--{k} needs a value"))?;
                (k.to_string(), v.clone())
            }
            None => return Err(format!("unexpected argument `{flag}`; overrides look like `--key value`")),
        };
        cfg.set(&key.replace('-', "_"), &value).map_err(|e| e.to_string())?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn load_kb(path: Option<&Path>) -> Res<KnowledgeBase> {
    match path {
        Some(p) if p.exists() => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
        _ => Ok(KnowledgeBase::new()),
    }
}

fn write(path: &Path, body: &str) -> Res<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    fs::write(path, body).map_err(|e| format!("{}: {e}", path.display()))
}

fn save_kb(path: Option<&Path>, kb: &KnowledgeBase) -> Res<()> {
    match path {
        Some(p) => write(p, &voxmem::canon::to_pretty(kb).map_err(|e| e.to_string())?),
        None => Ok(()),
    }
}

fn sweep(out: &Path, settings: &Settings, curriculum: bool) -> Res<()> {
    let cfg = load_config(settings)?;
    let mut kb = load_kb(settings.kb.as_deref())?;
    let mut store = ExperienceStore::open(out.join("store"), cfg.store_window).map_err(|e| e.to_string())?;
    let mut planner = cfg.planner.build().map_err(|e| e.to_string())?;
    let logs = EventLogs::Dir(out.join("events"));
    let report = if curriculum {
        curriculum_run(&cfg, planner.as_mut(), &mut store, &mut kb, &logs)
    } else {
        run_eval(&cfg, planner.as_mut(), &mut store, &mut kb, &logs)
    }
    .map_err(|e| e.to_string())?;
    let table = render_table(&report);
    write(&out.join("report.json"), &report.to_json())?;
    write(&out.join("report.txt"), &table)?;
    write(&out.join("kb.json"), &voxmem::canon::to_pretty(&kb).map_err(|e| e.to_string())?)?;
    save_kb(settings.kb.as_deref(), &kb)?;
    print!("{table}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.verb {
        Verb::Run { task, seed, store, events, settings } => (|| {
            let cfg = load_config(&settings)?;
            let t = cfg.task(&task).map_err(|e| e.to_string())?;
            let mut kb = load_kb(settings.kb.as_deref())?;
            let mut st = ExperienceStore::open(&store, cfg.store_window).map_err(|e| e.to_string())?;
            let mut planner = cfg.planner.build().map_err(|e| e.to_string())?;
            let spec = EpisodeSpec {
                episode_id: format!("{}_s{seed}_{:05}", t.name, st.len() + 1),
                goal: t.goal.clone(),
                seed,
                hazard: cfg.hazard,
                init_commands: t.init_commands.clone(),
                success_checks: t.success_checks.clone(),
                group: Some(t.group.clone()),
            };
            let mut ctl = cfg.controller.clone();
            ctl.step_budget = t.step_budget;
            let mut sink: Box<dyn EventSink> = match &events {
                Some(p) => Box::new(JsonlSink::new(fs::File::create(p).map_err(|e| format!("{}: {e}", p.display()))?)),
                None => Box::new(NullSink),
            };
            let r = run_episode(&spec, &ctl, &cfg.switches(), planner.as_mut(), &mut st, &mut kb, sink.as_mut());
            save_kb(settings.kb.as_deref(), &kb)?;
            println!("{}", voxmem::canon::to_pretty(&r).map_err(|e| e.to_string())?);
            Ok(())
        })(),
        Verb::Eval { out, settings } => sweep(&out, &settings, false),
        Verb::Curriculum { out, settings } => sweep(&out, &settings, true),
        Verb::InspectStore { store, doc, episode, limit } => (|| {
            if !store.exists() {
                return Err(format!("{}: no such store", store.display()));
            }
            let st = ExperienceStore::open(&store, 256).map_err(|e| e.to_string())?;
            if let Some(id) = doc {
                let d = st.get_document(&id).map_err(|e| e.to_string())?;
                println!("{}", voxmem::canon::to_pretty(d).map_err(|e| e.to_string())?);
                return Ok(());
            }
            println!("documents  {}", st.len());
            println!("live       {}", st.live_count());
            println!("summaries  {}", st.summaries().len());
            let entries: Vec<_> = match episode {
                Some(ep) => st
                    .documents()
                    .iter()
                    .filter(|d| d.episode_id == ep)
                    .filter_map(|d| st.entry(&d.doc_id).cloned())
                    .take(limit)
                    .collect(),
                None => st.live().cloned().collect::<Vec<_>>().into_iter().rev().take(limit).collect(),
            };
            for e in entries {
                println!("{}", voxmem::canon::to_line(&e).map_err(|e| e.to_string())?);
            }
            Ok(())
        })(),
        Verb::ExportKnowledge { kb, out } => (|| {
            let k = load_kb(Some(&kb))?;
            write(&out.join("skills.yaml"), &skills_to_yaml(&k))?;
            write(&out.join("failures.yaml"), &failures_to_yaml(&k))?;
            println!("{} skills, {} guardrails -> {}", k.skills.len(), k.guardrails.len(), out.display());
            Ok(())
        })(),
        Verb::Replay { skill, task, seed, settings } => (|| {
            let cfg = load_config(&settings)?;
            let kb = load_kb(settings.kb.as_deref())?;
            let s = kb.skill(&skill).ok_or_else(|| format!("no skill named `{skill}`"))?;
            let t = cfg.task(&task).map_err(|e| e.to_string())?;
            let spec = EpisodeSpec {
                episode_id: "replay".into(),
                goal: t.goal.clone(),
                seed,
                hazard: cfg.hazard,
                init_commands: t.init_commands.clone(),
                success_checks: t.success_checks.clone(),
                group: None,
            };
            let mut world = episode_world(&spec).map_err(|e| e.to_string())?;
            for _ in 0..cfg.controller.warmup_noops {
                world.step(&voxmem::sim::Action::Noop);
            }
            let o = replay_skill(&mut world, s, &cfg.controller);
            println!("{}", voxmem::canon::to_pretty(&o).map_err(|e| e.to_string())?);
            if o.success {
                Ok(())
            } else {
                Err("replay did not reach the success checks".into())
            }
        })(),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
