//! Shared fixtures, generators and reference implementations.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use voxmem::controller::{execute_subgoal, ControllerConfig, NavRules, POLL_HOLD};
use voxmem::diagnosis::{diagnose, AttemptTrace, TraceStep};
use voxmem::model::{
    compute_state_diff, CheckKind, CheckSpec, DiagnosisRecord, ExecutorHint, ExperienceTuple, FailureReason, Inventory,
    Mode, StateSnapshot, SubgoalSpec, TaskKind,
};
use voxmem::sim::world::{Grid, Gui};
use voxmem::sim::{Block, World};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- plans

pub fn card_plan() -> Value {
    json!({
        "plan_id": "p_xxxx",
        "subgoals": [{
            "subgoal_id": "sg_001",
            "condition": "mine oak logs",
            "timeout_s": 60,
            "task_kind": "mine",
            "executor_hint": "stevei",
            "mode": "move",
            "checks": [{"type": "inv_ge", "item": "oak_log", "n": 1}]
        }],
        "global_constraints": []
    })
}

fn with(f: impl FnOnce(&mut Value)) -> Value {
    let mut v = card_plan();
    f(&mut v);
    v
}

fn sg0(v: &mut Value) -> &mut serde_json::Map<String, Value> {
    v["subgoals"][0].as_object_mut().unwrap()
}

/// Twenty malformed plans, each with the field path its error must name.
pub fn malformed_plans() -> Vec<(&'static str, Value, &'static str)> {
    vec![
        ("missing plan_id", with(|v| drop(v.as_object_mut().unwrap().remove("plan_id"))), "plan_id"),
        ("numeric plan_id", with(|v| v["plan_id"] = json!(7)), "plan_id"),
        ("missing subgoals", with(|v| drop(v.as_object_mut().unwrap().remove("subgoals"))), "subgoals"),
        ("subgoals not a list", with(|v| v["subgoals"] = json!({"a": 1})), "subgoals"),
        ("empty subgoals", with(|v| v["subgoals"] = json!([])), "subgoals"),
        ("subgoal not an object", with(|v| v["subgoals"] = json!(["mine"])), "subgoals[0]"),
        ("missing subgoal_id", with(|v| drop(sg0(v).remove("subgoal_id"))), "subgoals[0].subgoal_id"),
        ("missing condition", with(|v| drop(sg0(v).remove("condition"))), "subgoals[0].condition"),
        ("blank condition", with(|v| v["subgoals"][0]["condition"] = json!("   ")), "subgoals[0].condition"),
        (
            "condition over six words",
            with(|v| v["subgoals"][0]["condition"] = json!("walk over there and mine some oak logs")),
            "subgoals[0].condition",
        ),
        ("missing timeout", with(|v| drop(sg0(v).remove("timeout_s"))), "subgoals[0].timeout_s"),
        ("zero timeout", with(|v| v["subgoals"][0]["timeout_s"] = json!(0)), "subgoals[0].timeout_s"),
        ("negative timeout", with(|v| v["subgoals"][0]["timeout_s"] = json!(-5)), "subgoals[0].timeout_s"),
        ("unknown task_kind", with(|v| v["subgoals"][0]["task_kind"] = json!("teleport")), "subgoals[0].task_kind"),
        (
            "unknown executor_hint",
            with(|v| v["subgoals"][0]["executor_hint"] = json!("autopilot")),
            "subgoals[0].executor_hint",
        ),
        ("unknown mode", with(|v| v["subgoals"][0]["mode"] = json!("fly")), "subgoals[0].mode"),
        ("missing checks", with(|v| drop(sg0(v).remove("checks"))), "subgoals[0].checks"),
        (
            "unknown check type",
            with(|v| v["subgoals"][0]["checks"] = json!([{"type": "vibes_ok"}])),
            "subgoals[0].checks[0].type",
        ),
        (
            "inv_ge without item",
            with(|v| v["subgoals"][0]["checks"] = json!([{"type": "inv_ge", "n": 1}])),
            "subgoals[0].checks[0].item",
        ),
        (
            "duplicate subgoal ids",
            with(|v| {
                let sg = v["subgoals"][0].clone();
                v["subgoals"].as_array_mut().unwrap().push(sg);
            }),
            "subgoals[1].subgoal_id",
        ),
    ]
}

// ---------------------------------------------------------------- worlds

pub const SPAWN: [i32; 3] = [8, 4, 8];

/// Bedrock floor, two stone layers, grass at y=3, open air above.
pub fn flat_world() -> World {
    let mut g = Grid::filled(Block::Air);
    for x in 0..32 {
        for z in 0..32 {
            g.set([x, 0, z], Block::Bedrock);
            g.set([x, 1, z], Block::Stone);
            g.set([x, 2, z], Block::Stone);
            g.set([x, 3, z], Block::Grass);
        }
    }
    World::new(0, g, SPAWN)
}

/// Stone columns two blocks tall at every listed floor cell.
pub fn wall(w: &mut World, cells: &[[i32; 2]]) {
    for [x, z] in cells {
        for y in 4..=6 {
            w.grid.set([*x, y, *z], Block::Stone);
        }
    }
}

/// Ring of walls around the rectangle of floor cells [x0..=x1] x [z0..=z1].
pub fn enclose(w: &mut World, x0: i32, x1: i32, z0: i32, z1: i32) {
    let mut cells = Vec::new();
    for x in x0 - 1..=x1 + 1 {
        cells.push([x, z0 - 1]);
        cells.push([x, z1 + 1]);
    }
    for z in z0..=z1 {
        cells.push([x0 - 1, z]);
        cells.push([x1 + 1, z]);
    }
    wall(w, &cells);
}

pub fn subgoal(condition: &str, kind: TaskKind, mode: Mode, timeout_s: u32, checks: Vec<CheckSpec>) -> SubgoalSpec {
    SubgoalSpec {
        subgoal_id: "sg_001".into(),
        condition: condition.into(),
        timeout_s,
        task_kind: kind,
        executor_hint: match kind {
            TaskKind::Craft | TaskKind::Use => ExecutorHint::CraftStation,
            TaskKind::Wait => ExecutorHint::Wait,
            _ => ExecutorHint::Default,
        },
        mode,
        checks,
    }
}

pub struct Fixture {
    pub name: &'static str,
    pub expect: FailureReason,
    pub world: World,
    pub subgoal: SubgoalSpec,
    pub cfg: ControllerConfig,
    pub max_steps: u64,
}

/// One attempt in the fixture world, diagnosed the way the controller does it.
pub fn attempt(world: &mut World, sg: &SubgoalSpec, cfg: &ControllerConfig, max_steps: u64) -> DiagnosisRecord {
    world.mark_attempt();
    let pre = world.snapshot("fixture");
    let out = execute_subgoal(world, "fixture", sg, &NavRules::default(), cfg, max_steps).expect("valid subgoal");
    let post = world.snapshot("fixture");
    diagnose(&pre, &post, sg, &out.trace, out.monitor_result, out.monitor_ever_true, out.timed_out, &cfg.stagnation)
        .expect("consistent snapshots")
}

fn lava_world() -> World {
    let mut w = flat_world();
    w.grid.set([SPAWN[0] + 1, 3, SPAWN[2]], Block::Lava);
    w
}

fn furnace_world() -> World {
    let mut w = flat_world();
    w.set_block([SPAWN[0] + 1, 4, SPAWN[2]], Block::Furnace);
    w
}

/// One scenario per failure reason.
pub fn taxonomy_fixtures() -> Vec<Fixture> {
    let cfg = ControllerConfig::default();
    let mut out = Vec::new();
    let fx = |name, expect, world, subgoal, cfg: &ControllerConfig| Fixture {
        name,
        expect,
        world,
        subgoal,
        cfg: cfg.clone(),
        max_steps: u64::MAX,
    };

    let mut walled = flat_world();
    enclose(&mut walled, SPAWN[0], SPAWN[0], SPAWN[2], SPAWN[2]);
    let mine_log = subgoal("mine oak log", TaskKind::Mine, Mode::Move, 5, vec![CheckSpec::inv_ge("oak_log", 1)]);
    out.push(fx("walled agent", FailureReason::NavStuck, walled, mine_log.clone(), &cfg));

    let mut corridor = flat_world();
    enclose(&mut corridor, SPAWN[0], SPAWN[0] + 1, SPAWN[2], SPAWN[2]);
    out.push(fx("two-cell corridor", FailureReason::NavOscillate, corridor, mine_log, &cfg));

    let mut sealed = flat_world();
    enclose(&mut sealed, 20, 22, 20, 22);
    let reach = subgoal(
        "reach sealed room",
        TaskKind::Wait,
        Mode::Stay,
        3,
        vec![CheckSpec::coord_near([21.0, 4.0, 21.0], 1.0)],
    );
    out.push(fx("unreachable target", FailureReason::PathUnreachable, sealed, reach, &cfg));

    let poll =
        subgoal("use furnace", TaskKind::Use, Mode::Stay, 3, vec![CheckSpec::with_n(CheckKind::FurnaceCookGe, 1)]);
    out.push(fx("cycling an empty furnace", FailureReason::GuiBlocked, furnace_world(), poll, &cfg));

    let never = subgoal(
        "wait for dawn",
        TaskKind::Wait,
        Mode::Stay,
        1,
        vec![CheckSpec::with_n(CheckKind::WorldTimeGe, 1_000_000_000)],
    );
    out.push(fx("impossible check", FailureReason::MonitorNeverTrue, flat_world(), never.clone(), &cfg));

    let iron = subgoal("mine iron ore", TaskKind::Mine, Mode::Move, 5, vec![CheckSpec::inv_ge("iron_ore", 1)]);
    out.push(fx("missing tool tier", FailureReason::ToolMissing, flat_world(), iron, &cfg));

    let mut gui_open = furnace_world();
    gui_open.gui = Gui::Inventory;
    let flicker = subgoal("use furnace", TaskKind::Use, Mode::Stay, 1, vec![CheckSpec::bare(CheckKind::GuiIsClosed)]);
    // Budget ends on the tick the GUI closes, one short of confirmation.
    out.push(Fixture {
        max_steps: POLL_HOLD as u64 + 1,
        ..fx("tight budget", FailureReason::Timeout, gui_open, flicker, &cfg)
    });

    let reckless = ControllerConfig { risk_abort_health: None, ..cfg.clone() };
    let linger = subgoal(
        "wait near lava",
        TaskKind::Wait,
        Mode::Stay,
        30,
        vec![CheckSpec::with_n(CheckKind::WorldTimeGe, 1_000_000_000)],
    );
    out.push(fx("lava death", FailureReason::EnvTerminated, lava_world(), linger.clone(), &reckless));

    let equip = subgoal(
        "use held item",
        TaskKind::Use,
        Mode::Stay,
        3,
        vec![CheckSpec::with_item(CheckKind::EquippedIs, "wooden_pickaxe")],
    );
    out.push(fx("use with empty hands", FailureReason::ActionInvalid, flat_world(), equip, &cfg));

    out.push(fx("risk flag", FailureReason::RiskAbort, lava_world(), linger, &cfg));

    let mut logs = flat_world();
    logs.add_item("oak_log", 1);
    let odd = subgoal(
        "craft plank",
        TaskKind::Craft,
        Mode::Stay,
        5,
        vec![CheckSpec::inv_ge("plank", 4), CheckSpec::bare(CheckKind::GuiIsOpen)],
    );
    out.push(fx("fallback", FailureReason::Unknown, logs, odd, &cfg));
    out
}

// ---------------------------------------------------------------- tuples

const CONDITIONS: &[(&str, TaskKind, &str)] = &[
    ("mine oak log", TaskKind::Mine, "oak_log"),
    ("mine cobblestone", TaskKind::Mine, "cobblestone"),
    ("mine iron ore", TaskKind::Mine, "iron_ore"),
    ("craft plank", TaskKind::Craft, "plank"),
    ("craft stick", TaskKind::Craft, "stick"),
    ("craft crafting table", TaskKind::Craft, "crafting_table"),
    ("craft wooden pickaxe", TaskKind::Craft, "wooden_pickaxe"),
    ("smelt iron ingot", TaskKind::Craft, "iron_ingot"),
    ("use furnace", TaskKind::Use, "iron_ingot"),
    ("wait for smelting", TaskKind::Wait, "iron_ingot"),
];

pub const ALL_REASONS: [FailureReason; 11] = [
    FailureReason::NavStuck,
    FailureReason::NavOscillate,
    FailureReason::PathUnreachable,
    FailureReason::GuiBlocked,
    FailureReason::MonitorNeverTrue,
    FailureReason::ToolMissing,
    FailureReason::Timeout,
    FailureReason::EnvTerminated,
    FailureReason::ActionInvalid,
    FailureReason::RiskAbort,
    FailureReason::Unknown,
];

/// A random but internally consistent tuple; `clock` advances world time.
pub fn random_tuple(r: &mut impl Rng, episode: &str, attempt_index: u32, clock: &mut u64) -> ExperienceTuple {
    let (cond, kind, item) = CONDITIONS[r.gen_range(0..CONDITIONS.len())];
    let mut pre = StateSnapshot::empty(episode);
    pre.coords = [r.gen_range(0..32) as f64, 4.0, r.gen_range(0..32) as f64];
    pre.coords_start = pre.coords;
    pre.world_time = *clock;
    let mut inv = Inventory::new();
    for (name, _, _) in CONDITIONS.iter().take(r.gen_range(0..4)) {
        let it = name.rsplit(' ').next().unwrap();
        if voxmem::sim::items::is_known_item(it) {
            inv.insert(it.to_string(), r.gen_range(1..5));
        }
    }
    pre.inventory = inv.clone();
    let outcome = r.gen_bool(0.5);
    let mut post = pre.clone();
    *clock += r.gen_range(1..200);
    post.world_time = *clock;
    post.coords = [pre.coords[0] + r.gen_range(-3..=3) as f64, 4.0, pre.coords[2] + r.gen_range(-3..=3) as f64];
    if outcome || r.gen_bool(0.2) {
        *post.inventory.entry(item.to_string()).or_default() += r.gen_range(1..4);
    }
    let reason = (!outcome).then(|| ALL_REASONS[r.gen_range(0..ALL_REASONS.len())]);
    let diff = compute_state_diff(&pre, &post).expect("same episode");
    let ind = [
        r.gen_range(0.0..4.0),
        r.gen_range(0..5) as f64,
        r.gen_range(0..4) as f64,
        r.gen_range(0..4) as f64,
        r.gen_range(0.0..6.0),
        -(r.gen_range(0..4) as f64),
    ];
    ExperienceTuple {
        doc_id: String::new(),
        episode_id: episode.to_string(),
        attempt_index,
        s_pre: pre,
        action: subgoal(cond, kind, Mode::Move, 30, vec![CheckSpec::inv_ge(item, 1)]),
        diagnosis: DiagnosisRecord::new(outcome, diff, reason, ind).expect("consistent record"),
        s_post: post,
    }
}

// ---------------------------------------------------------------- traces

/// A 200-step trace mixing still, jittering, pacing and walking stretches,
/// with occasional inventory changes.
pub fn random_trace(r: &mut impl Rng, len: usize) -> AttemptTrace {
    let mut pos = [16.0f64, 4.0, 16.0];
    let mut inv = Inventory::new();
    let mut steps = Vec::with_capacity(len);
    let mut regime = 0;
    for t in 0..len {
        if t % 25 == 0 {
            regime = r.gen_range(0..4);
        }
        match regime {
            0 => {}
            1 => {
                pos[0] += r.gen_range(-0.2..0.2);
                pos[2] += r.gen_range(-0.2..0.2);
            }
            2 => pos[0] += if t % 2 == 0 { 1.0 } else { -1.0 },
            _ => {
                pos[r.gen_range(0..2) * 2] += if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
        }
        if r.gen_bool(0.03) {
            *inv.entry("oak_log".to_string()).or_default() += 1;
        }
        steps.push(TraceStep {
            coords: pos,
            inventory: inv.clone(),
            gui_open: false,
            world_time: t as u64,
            health: 20.0,
        });
    }
    AttemptTrace::from_steps(steps).expect("time advances")
}

/// Direct recomputation of the stagnation predicate over `steps`.
pub fn stagnant_reference(steps: &[TraceStep], eps_nav: f64, eps_inv: u64) -> bool {
    let n = steps.len() as f64;
    let mut var = 0.0;
    for axis in 0..3 {
        let mean = steps.iter().map(|s| s.coords[axis]).sum::<f64>() / n;
        var += steps.iter().map(|s| (s.coords[axis] - mean).powi(2)).sum::<f64>() / n;
    }
    var /= 3.0;
    let mut l1 = 0u64;
    for i in 1..steps.len() {
        let (a, b) = (&steps[i - 1].inventory, &steps[i].inventory);
        let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
        for k in keys {
            let x = *a.get(k).unwrap_or(&0) as i64;
            let y = *b.get(k).unwrap_or(&0) as i64;
            l1 += (x - y).unsigned_abs();
        }
    }
    var < eps_nav && l1 <= eps_inv
}

// ---------------------------------------------------------------- recall

/// Reference text embedding: hashed token counts, unit length.
pub fn reference_embed(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for raw in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        if raw.is_empty() {
            continue;
        }
        let mut tok = raw.to_ascii_lowercase();
        if tok.len() > 3 && tok.ends_with('s') && !tok.ends_with("ss") {
            tok.pop();
        }
        let mut h: u64 = 0xcbf29ce484222325;
        for b in tok.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        v[(h % dim as u64) as usize] += 1.0;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in &mut v {
            *x /= n;
        }
    }
    v
}

pub fn reference_psi(ctx_text: &str, cand_text: &str, sig_match: bool, alpha: f64, beta: f64, dim: usize) -> f64 {
    let a = reference_embed(ctx_text, dim);
    let b = reference_embed(cand_text, dim);
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    alpha * dot + beta * if sig_match { 1.0 } else { 0.0 }
}
