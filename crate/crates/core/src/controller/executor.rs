//! Low-level policies that turn one subgoal into actions.

use std::collections::VecDeque;

use super::nav::{aim, find_path, moves, reachable_blocks, NavRules};
use crate::model::{CheckKind, Mode, SubgoalSpec, TaskKind};
use crate::sim::items::ToolTier;
use crate::sim::world::{Gui, Pos};
use crate::sim::{Action, Block, Dir, Station, World};

/// Ticks a polling executor keeps a station open.
pub const POLL_HOLD: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Act(Action),
    Done,
    /// The executor cannot continue without this item.
    Missing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Navigating,
    Working,
}

#[derive(Debug, Clone, PartialEq)]
enum Job {
    Mine { item: String },
    Craft { recipe: String, item: String, station: Station },
    Smelt { recipe: String, item: String, input: String, fuel: String },
    Poll,
    Reach { target: [f64; 3], radius: f64 },
    Relocate { dist: f64 },
    Idle,
}

#[derive(Debug, Clone)]
pub struct Executor {
    job: Job,
    mode: Mode,
    rules: NavRules,
    target_count: Option<u32>,
    path: VecDeque<(Action, Pos)>,
    expected: Option<Pos>,
    phase: Phase,
    wander: usize,
    hold: u32,
}

fn dist(a: Pos, b: [f64; 3]) -> f64 {
    let d = [a[0] as f64 - b[0], a[1] as f64 - b[1], a[2] as f64 - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Inventory count that satisfies the subgoal's item check, if it has one.
fn target_count(sg: &SubgoalSpec, world: &World) -> Option<u32> {
    let item = sg.target_item()?;
    let c = sg.checks.iter().find(|c| c.item.as_deref() == Some(item))?;
    let n = c.n.unwrap_or(1).max(0) as u32;
    Some(match c.kind {
        CheckKind::InvGe => n,
        CheckKind::InvDeltaGe => world.window.inventory.get(item).copied().unwrap_or(0) + n,
        _ => world.count(item) + 1,
    })
}

impl Executor {
    pub fn for_subgoal(sg: &SubgoalSpec, world: &World, rules: NavRules) -> Self {
        let recipes = world.recipes();
        let job = match sg.task_kind {
            TaskKind::Mine => match sg.target_item() {
                Some(item) => Job::Mine { item: item.to_string() },
                None => Job::Idle,
            },
            TaskKind::Craft => match sg.target_item().and_then(|i| recipes.recipe_for(i)) {
                Some(r) if r.station == Station::Furnace => Job::Smelt {
                    recipe: r.id.clone(),
                    item: r.output.clone(),
                    input: r.inputs.keys().next().cloned().unwrap_or_default(),
                    fuel: r.fuel.clone().unwrap_or_default(),
                },
                Some(r) => Job::Craft { recipe: r.id.clone(), item: r.output.clone(), station: r.station },
                None => Job::Idle,
            },
            TaskKind::Use => Job::Poll,
            TaskKind::Wait => {
                if let Some(c) = sg.checks.iter().find(|c| c.kind == CheckKind::CoordNear && c.target.is_some()) {
                    Job::Reach { target: c.target.expect("checked"), radius: c.radius.unwrap_or(1.0) }
                } else if let Some(c) = sg.checks.iter().find(|c| c.kind == CheckKind::CoordMovedGe) {
                    Job::Relocate { dist: c.n.unwrap_or(1) as f64 }
                } else {
                    Job::Idle
                }
            }
            TaskKind::Combat => Job::Idle,
        };
        Executor {
            job,
            mode: sg.mode,
            rules,
            target_count: target_count(sg, world),
            path: VecDeque::new(),
            expected: None,
            phase: Phase::Idle,
            wander: 0,
            hold: 0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn next(&mut self, w: &World) -> Step {
        match self.job.clone() {
            Job::Mine { item } => self.mine(w, &item),
            Job::Craft { recipe, item, station } => self.craft(w, &recipe, &item, station),
            Job::Smelt { recipe: _, item, input, fuel } => self.smelt(w, &item, &input, &fuel),
            Job::Poll => self.poll(w),
            Job::Reach { target, radius } => self.travel(w, &|q| dist(q, target) <= radius),
            Job::Relocate { dist: d } => {
                let from = w.window.coords;
                self.travel(w, &|q| dist(q, from) >= d)
            }
            Job::Idle => self.idle(),
        }
    }

    fn idle(&mut self) -> Step {
        self.phase = Phase::Idle;
        match self.mode {
            Mode::Move => {
                let d = Dir::ALL[self.wander % 4];
                self.wander += 1;
                Step::Act(Action::Move(d))
            }
            Mode::Stay => Step::Act(Action::Noop),
        }
    }

    /// Next move along a cached or fresh path to a cell satisfying `goal`.
    fn path_step(&mut self, w: &World, goal: &dyn Fn(Pos) -> bool) -> Option<Step> {
        let here = w.agent.pos;
        if self.expected.take().is_some_and(|e| e != here) {
            self.path.clear();
        }
        if self.path.is_empty() {
            let (_, actions) = find_path(&w.grid, here, &self.rules, goal)?;
            let mut pos = here;
            for a in actions {
                let next = moves(&w.grid, pos).into_iter().find(|(b, _)| *b == a).map(|(_, p)| p)?;
                self.path.push_back((a, next));
                pos = next;
            }
        }
        let (a, at) = self.path.pop_front()?;
        self.expected = Some(at);
        self.phase = Phase::Navigating;
        Some(Step::Act(a))
    }

    fn face(&mut self, w: &World, block: Pos, then: Action) -> Step {
        self.phase = Phase::Working;
        self.path.clear();
        self.expected = None;
        let (d, pitch) = aim(w.agent.pos, block).expect("adjacent block");
        if w.agent.facing != d {
            Step::Act(Action::Turn(d))
        } else if w.agent.pitch != pitch {
            Step::Act(Action::Look(pitch))
        } else {
            Step::Act(then)
        }
    }

    fn travel(&mut self, w: &World, goal: &dyn Fn(Pos) -> bool) -> Step {
        if w.gui_open() {
            return Step::Act(Action::CloseGui);
        }
        if goal(w.agent.pos) {
            self.path.clear();
            self.phase = Phase::Idle;
            return Step::Act(Action::Noop);
        }
        self.path_step(w, goal).unwrap_or_else(|| self.idle())
    }

    fn mine(&mut self, w: &World, item: &str) -> Step {
        if w.gui_open() {
            return Step::Act(Action::CloseGui);
        }
        let best = [ToolTier::Iron, ToolTier::Stone, ToolTier::Wooden]
            .into_iter()
            .filter_map(|t| t.tool_item())
            .find(|i| w.count(i) > 0 && w.slot_of(i).is_some());
        if let Some(tool) = best {
            if w.equipped() != Some(tool) {
                return Step::Act(Action::Select(w.slot_of(tool).expect("checked")));
            }
        }
        let tier = ToolTier::of_item(w.equipped());
        let sources = Block::sources_of(item);
        let grid = &w.grid;
        let minable = |b: Pos| {
            let blk = grid.get(b);
            sources.contains(&blk) && blk.break_ticks(tier).is_some()
        };
        let here = w.agent.pos;
        let safe_here = !(self.rules.avoid_hazard && grid.near_lava(here));
        if safe_here {
            if let Some(b) = reachable_blocks(here).find(|b| minable(*b)) {
                return self.face(w, b, Action::Mine);
            }
        }
        let goal = |q: Pos| reachable_blocks(q).any(&minable);
        self.path_step(w, &goal).unwrap_or_else(|| self.idle())
    }

    /// Steps that get the station GUI open; `None` once it is.
    fn open_station(&mut self, w: &World, station: Station) -> Option<Step> {
        match (station, w.gui) {
            (Station::None, Gui::Inventory | Gui::Table) => return None,
            (Station::Table, Gui::Table) => return None,
            (Station::Furnace, Gui::Furnace(_)) => return None,
            (_, Gui::Closed) => {}
            _ => return Some(Step::Act(Action::CloseGui)),
        }
        let Some(block) = station.block() else {
            return Some(Step::Act(Action::OpenInventory));
        };
        let here = w.agent.pos;
        if let Some(b) = reachable_blocks(here).find(|b| w.grid.get(*b) == block) {
            return Some(self.face(w, b, Action::OpenStation));
        }
        if !w.grid.positions_of(block).is_empty() {
            let goal = |q: Pos| reachable_blocks(q).any(|b| w.grid.get(b) == block);
            if let Some(s) = self.path_step(w, &goal) {
                return Some(s);
            }
        }
        let item = station.item().expect("station item");
        if w.count(item) == 0 {
            return Some(Step::Missing(item.to_string()));
        }
        if w.grid.near_lava(here) {
            let grid = &w.grid;
            if let Some(s) = self.path_step(w, &|q| !grid.near_lava(q)) {
                return Some(s);
            }
        }
        let Some(slot) = w.slot_of(item) else { return Some(Step::Missing(item.to_string())) };
        if w.equipped() != Some(item) {
            return Some(Step::Act(Action::Select(slot)));
        }
        let spot = Dir::ALL.into_iter().map(|d| {
            let (dx, dz) = d.offset();
            [here[0] + dx, here[1], here[2] + dz]
        });
        let free: Vec<Pos> =
            spot.filter(|f| crate::sim::world::in_bounds(*f) && w.grid.get(*f) == Block::Air).collect();
        let pick = free.iter().find(|f| w.grid.get([f[0], f[1] - 1, f[2]]).is_solid()).or(free.first()).copied();
        match pick {
            Some(f) => Some(self.face(w, f, Action::Place)),
            None => Some(Step::Missing(item.to_string())),
        }
    }

    fn finish(&mut self, w: &World) -> Step {
        self.phase = Phase::Idle;
        if w.gui_open() {
            Step::Act(Action::CloseGui)
        } else {
            Step::Done
        }
    }

    fn craft(&mut self, w: &World, recipe: &str, item: &str, station: Station) -> Step {
        let want = self.target_count.unwrap_or(1);
        if w.count(item) >= want {
            return self.finish(w);
        }
        let r = w.recipes().get(recipe).cloned().expect("recipe exists");
        if let Some((k, _)) = r.inputs.iter().find(|(k, n)| w.count(k) < **n) {
            return Step::Missing(k.clone());
        }
        if let Some(s) = self.open_station(w, station) {
            return s;
        }
        self.phase = Phase::Working;
        Step::Act(Action::Craft(recipe.to_string()))
    }

    fn smelt(&mut self, w: &World, item: &str, input: &str, fuel: &str) -> Step {
        let want = self.target_count.unwrap_or(1);
        if w.count(item) >= want {
            return self.finish(w);
        }
        if let Some(s) = self.open_station(w, Station::Furnace) {
            return s;
        }
        self.phase = Phase::Working;
        let Gui::Furnace(i) = w.gui else { return Step::Act(Action::Noop) };
        let Some(f) = w.furnaces.get(&i) else { return Step::Act(Action::CloseGui) };
        if f.output_count > 0 {
            return Step::Act(Action::SmeltCollect);
        }
        let input_fits = f.input.as_deref().is_none_or(|cur| cur == input);
        if w.count(item) + f.input_count < want && input_fits {
            if w.count(input) > 0 {
                return Step::Act(Action::SmeltLoad { input: Some(input.to_string()), fuel: None });
            }
            if f.input_count == 0 {
                return Step::Missing(input.to_string());
            }
        }
        if f.input_count > 0 && f.burn_ticks == 0 && f.fuel_count == 0 {
            if w.count(fuel) == 0 {
                return Step::Missing(fuel.to_string());
            }
            return Step::Act(Action::SmeltLoad { input: None, fuel: Some(fuel.to_string()) });
        }
        Step::Act(Action::Noop)
    }

    fn poll(&mut self, w: &World) -> Step {
        if w.gui_open() {
            self.phase = Phase::Working;
            if self.hold < POLL_HOLD {
                self.hold += 1;
                return Step::Act(Action::Noop);
            }
            self.hold = 0;
            return Step::Act(Action::CloseGui);
        }
        let is_station = |b: Block| matches!(b, Block::Furnace | Block::CraftingTable);
        let here = w.agent.pos;
        if let Some(b) = reachable_blocks(here).find(|b| is_station(w.grid.get(*b))) {
            self.hold = 0;
            return self.face(w, b, Action::OpenStation);
        }
        let any =
            !w.grid.positions_of(Block::Furnace).is_empty() || !w.grid.positions_of(Block::CraftingTable).is_empty();
        if any {
            let goal = |q: Pos| reachable_blocks(q).any(|b| is_station(w.grid.get(b)));
            if let Some(s) = self.path_step(w, &goal) {
                return s;
            }
        }
        self.phase = Phase::Working;
        Step::Act(Action::Use)
    }
}
