//! Deterministic voxel world: grid, agent, furnaces, tick stepping.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::action::{Action, Dir, Pitch};
use super::items::{Block, ToolTier};
use super::recipes::{fuel_ticks, RecipeGraph, Station, COOK_TICKS};
use crate::model::{GuiEvents, GuiState, Inventory, StateSnapshot};

pub const WIDTH: i32 = 32;
pub const HEIGHT: i32 = 8;
pub const DEPTH: i32 = 32;
pub const TICKS_PER_SECOND: u64 = 20;
pub const MAX_HEALTH: f64 = 20.0;
pub const HOTBAR_SLOTS: usize = 9;
pub const LAVA_DAMAGE: f64 = 2.0;
pub const REGEN_INTERVAL: u32 = 20;

pub type Pos = [i32; 3];

pub fn in_bounds(p: Pos) -> bool {
    (0..WIDTH).contains(&p[0]) && (0..HEIGHT).contains(&p[1]) && (0..DEPTH).contains(&p[2])
}

fn index(p: Pos) -> usize {
    ((p[1] * DEPTH + p[2]) * WIDTH + p[0]) as usize
}

fn pos_of(i: usize) -> Pos {
    let i = i as i32;
    [i % WIDTH, i / (WIDTH * DEPTH), (i / WIDTH) % DEPTH]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    cells: Vec<u8>,
}

impl Grid {
    pub fn filled(b: Block) -> Self {
        Grid { cells: vec![b as u8; (WIDTH * HEIGHT * DEPTH) as usize] }
    }

    /// Out-of-bounds reads above the build limit are air, elsewhere bedrock.
    pub fn get(&self, p: Pos) -> Block {
        if in_bounds(p) {
            Block::ALL[self.cells[index(p)] as usize]
        } else if p[1] >= HEIGHT && (0..WIDTH).contains(&p[0]) && (0..DEPTH).contains(&p[2]) {
            Block::Air
        } else {
            Block::Bedrock
        }
    }

    pub fn set(&mut self, p: Pos, b: Block) -> bool {
        if !in_bounds(p) {
            return false;
        }
        self.cells[index(p)] = b as u8;
        true
    }

    pub fn positions_of(&self, b: Block) -> Vec<Pos> {
        self.cells.iter().enumerate().filter(|(_, c)| **c == b as u8).map(|(i, _)| pos_of(i)).collect()
    }

    pub fn passable(&self, p: Pos) -> bool {
        !self.get(p).is_solid()
    }

    /// Agent (two cells tall) can stand with feet at `p`.
    pub fn standable(&self, p: Pos) -> bool {
        in_bounds(p)
            && self.passable(p)
            && self.passable([p[0], p[1] + 1, p[2]])
            && self.get([p[0], p[1] - 1, p[2]]).is_solid()
    }

    /// Any lava within one cell (Chebyshev) of the feet or head cell.
    pub fn near_lava(&self, p: Pos) -> bool {
        for dy in -1..=2 {
            for dx in -1..=1 {
                for dz in -1..=1 {
                    if self.get([p[0] + dx, p[1] + dy, p[2] + dz]) == Block::Lava {
                        return true;
                    }
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Furnace {
    pub input: Option<String>,
    pub input_count: u32,
    pub fuel: Option<String>,
    pub fuel_count: u32,
    pub burn_ticks: u32,
    pub cook_ticks: u32,
    pub output: Option<String>,
    pub output_count: u32,
    pub cooked_total: u32,
}

impl Furnace {
    fn tick(&mut self, recipes: &RecipeGraph) {
        if self.burn_ticks == 0 && self.input_count > 0 && self.fuel_count > 0 {
            let f = self.fuel.clone().unwrap_or_default();
            self.burn_ticks = fuel_ticks(&f).unwrap_or(0);
            self.fuel_count -= 1;
            if self.fuel_count == 0 {
                self.fuel = None;
            }
        }
        if self.burn_ticks == 0 {
            return;
        }
        self.burn_ticks -= 1;
        if self.input_count == 0 {
            self.cook_ticks = 0;
            return;
        }
        self.cook_ticks += 1;
        if self.cook_ticks >= COOK_TICKS {
            self.cook_ticks = 0;
            let input = self.input.clone().unwrap_or_default();
            let out = smelt_output(recipes, &input).unwrap_or(input);
            self.input_count -= 1;
            if self.input_count == 0 {
                self.input = None;
            }
            self.output = Some(out);
            self.output_count += 1;
            self.cooked_total += 1;
        }
    }

    pub fn item_count(&self) -> u32 {
        self.input_count + self.fuel_count + self.output_count
    }

    /// Completed items plus fractional progress on the current one.
    pub fn cook_progress(&self) -> f64 {
        self.cooked_total as f64 + self.cook_ticks as f64 / COOK_TICKS as f64
    }
}

fn smelt_output(recipes: &RecipeGraph, input: &str) -> Option<String> {
    recipes
        .recipes()
        .iter()
        .find(|r| r.station == Station::Furnace && r.inputs.contains_key(input))
        .map(|r| r.output.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gui {
    Closed,
    Inventory,
    Table,
    Furnace(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub pos: Pos,
    pub facing: Dir,
    pub pitch: Pitch,
    pub slot: u8,
    pub health: f64,
    pub hunger: f64,
}

/// Observation window reset at each attempt boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptWindow {
    pub inventory: Inventory,
    pub coords: [f64; 3],
    pub positions: Vec<[f64; 3]>,
    pub gui_events: GuiEvents,
    pub crafted: Vec<String>,
}

/// What one tick produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub tick: u64,
    pub coords: [f64; 3],
    pub inventory: Inventory,
    pub gui_open: bool,
    pub world_time: u64,
    pub health: f64,
    pub rejected: bool,
    pub damaged: bool,
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub seed: u64,
    pub grid: Grid,
    pub agent: Agent,
    pub spawn: Pos,
    pub inventory: Inventory,
    pub hotbar: [Option<String>; HOTBAR_SLOTS],
    pub gui: Gui,
    pub furnaces: BTreeMap<usize, Furnace>,
    pub damage: BTreeMap<usize, u32>,
    pub tick: u64,
    pub world_time: u64,
    pub regen_counter: u32,
    pub terminated: bool,
    pub window: AttemptWindow,
    #[serde(skip)]
    recipes: RecipeGraph,
}

fn fpos(p: Pos) -> [f64; 3] {
    [p[0] as f64, p[1] as f64, p[2] as f64]
}

impl World {
    /// A world over `grid` with the agent dropped at `spawn`.
    pub fn new(seed: u64, grid: Grid, spawn: Pos) -> Self {
        let mut w = World {
            seed,
            grid,
            agent: Agent {
                pos: spawn,
                facing: Dir::North,
                pitch: Pitch::Level,
                slot: 0,
                health: MAX_HEALTH,
                hunger: 20.0,
            },
            spawn,
            inventory: Inventory::new(),
            hotbar: Default::default(),
            gui: Gui::Closed,
            furnaces: BTreeMap::new(),
            damage: BTreeMap::new(),
            tick: 0,
            world_time: 0,
            regen_counter: 0,
            terminated: false,
            window: AttemptWindow {
                inventory: Inventory::new(),
                coords: fpos(spawn),
                positions: vec![fpos(spawn)],
                gui_events: GuiEvents::default(),
                crafted: Vec::new(),
            },
            recipes: RecipeGraph::shipped(),
        };
        w.settle();
        w.mark_attempt();
        w
    }

    pub fn recipes(&self) -> &RecipeGraph {
        &self.recipes
    }

    pub fn coords(&self) -> [f64; 3] {
        fpos(self.agent.pos)
    }

    pub fn count(&self, item: &str) -> u32 {
        self.inventory.get(item).copied().unwrap_or(0)
    }

    pub fn equipped(&self) -> Option<&str> {
        self.hotbar[self.agent.slot as usize].as_deref().filter(|i| self.count(i) > 0)
    }

    pub fn slot_of(&self, item: &str) -> Option<u8> {
        self.hotbar.iter().position(|s| s.as_deref() == Some(item)).map(|i| i as u8)
    }

    /// Cell the agent is aiming at.
    pub fn faced(&self) -> Pos {
        let (dx, dz) = self.agent.facing.offset();
        let p = self.agent.pos;
        let dy = match self.agent.pitch {
            Pitch::Up => 1,
            Pitch::Level => 0,
            Pitch::Down => -1,
        };
        [p[0] + dx, p[1] + dy, p[2] + dz]
    }

    pub fn add_item(&mut self, item: &str, n: u32) {
        if n == 0 {
            return;
        }
        *self.inventory.entry(item.to_string()).or_insert(0) += n;
        if self.slot_of(item).is_none() {
            if let Some(free) = self.hotbar.iter().position(|s| s.is_none()) {
                self.hotbar[free] = Some(item.to_string());
            }
        }
    }

    pub fn remove_item(&mut self, item: &str, n: u32) -> bool {
        let have = self.count(item);
        if have < n {
            return false;
        }
        if have == n {
            self.inventory.remove(item);
            if let Some(s) = self.slot_of(item) {
                self.hotbar[s as usize] = None;
            }
        } else {
            self.inventory.insert(item.to_string(), have - n);
        }
        true
    }

    pub fn set_block(&mut self, p: Pos, b: Block) -> bool {
        if !in_bounds(p) {
            return false;
        }
        let i = index(p);
        self.damage.remove(&i);
        if self.grid.get(p) == Block::Furnace && b != Block::Furnace {
            self.furnaces.remove(&i);
        }
        if b == Block::Furnace {
            self.furnaces.entry(i).or_default();
        }
        self.grid.set(p, b);
        if self.agent.pos == p || self.agent.pos == [p[0], p[1] - 1, p[2]] {
            self.settle();
        }
        true
    }

    /// Lift the agent out of solid cells, then apply gravity.
    pub fn settle(&mut self) {
        while self.agent.pos[1] < HEIGHT - 1
            && !(self.grid.passable(self.agent.pos)
                && self.grid.passable([self.agent.pos[0], self.agent.pos[1] + 1, self.agent.pos[2]]))
        {
            self.agent.pos[1] += 1;
        }
        while self.agent.pos[1] > 1 && self.grid.passable([self.agent.pos[0], self.agent.pos[1] - 1, self.agent.pos[2]])
        {
            self.agent.pos[1] -= 1;
        }
    }

    pub fn gui_open(&self) -> bool {
        self.gui != Gui::Closed
    }

    fn open_gui(&mut self, g: Gui) {
        self.gui = g;
        self.window.gui_events.open += 1;
    }

    /// Furnace the observables report: the open one, else the nearest within reach.
    pub fn focused_furnace(&self) -> Option<&Furnace> {
        if let Gui::Furnace(i) = self.gui {
            return self.furnaces.get(&i);
        }
        let a = self.agent.pos;
        self.furnaces
            .iter()
            .map(|(i, f)| {
                let p = pos_of(*i);
                let d = (p[0] - a[0]).abs().max((p[1] - a[1]).abs()).max((p[2] - a[2]).abs());
                (d, *i, f)
            })
            .filter(|(d, _, _)| *d <= 3)
            .min_by_key(|(d, i, _)| (*d, *i))
            .map(|(_, _, f)| f)
    }

    /// Start a new attempt window at the current state.
    pub fn mark_attempt(&mut self) {
        self.window = AttemptWindow {
            inventory: self.inventory.clone(),
            coords: self.coords(),
            positions: vec![self.coords()],
            gui_events: GuiEvents::default(),
            crafted: Vec::new(),
        };
    }

    pub fn snapshot(&self, episode_id: &str) -> StateSnapshot {
        let furnace = self.focused_furnace();
        StateSnapshot {
            episode_id: episode_id.to_string(),
            coords_start: self.window.coords,
            coords: self.coords(),
            coords_variance: mean_axis_variance(&self.window.positions),
            inventory: self.inventory.clone(),
            inv_delta: crate::model::inventory_delta(&self.window.inventory, &self.inventory),
            gui_open: self.gui_open(),
            gui_state: if self.gui_open() { GuiState::Open } else { GuiState::Closed },
            gui_events: self.window.gui_events,
            world_time: self.world_time,
            furnace_burn: furnace.map(|f| f.burn_ticks as f64).unwrap_or(0.0),
            furnace_cook: furnace.map(|f| f.cook_progress()).unwrap_or(0.0),
            container_items: furnace.map(|f| f.item_count()).unwrap_or(0),
            crafted_items: self.window.crafted.clone(),
            equipped: self.equipped().map(String::from),
            health: self.agent.health,
            hunger: self.agent.hunger,
        }
    }

    /// Apply one action and advance one tick.
    pub fn step(&mut self, action: &Action) -> StepRecord {
        let mut rejected = false;
        let mut damaged = false;
        if !self.terminated {
            rejected = !self.apply(action);
            damaged = self.physics();
            for f in self.furnaces.values_mut() {
                f.tick(&self.recipes);
            }
            self.world_time += 1;
            self.window.positions.push(self.coords());
        }
        self.tick += 1;
        StepRecord {
            tick: self.tick,
            coords: self.coords(),
            inventory: self.inventory.clone(),
            gui_open: self.gui_open(),
            world_time: self.world_time,
            health: self.agent.health,
            rejected,
            damaged,
            terminated: self.terminated,
        }
    }

    fn physics(&mut self) -> bool {
        let hurt = self.grid.near_lava(self.agent.pos);
        if hurt {
            self.agent.health = (self.agent.health - LAVA_DAMAGE).max(0.0);
            self.regen_counter = 0;
        } else if self.agent.health < MAX_HEALTH {
            self.regen_counter += 1;
            if self.regen_counter >= REGEN_INTERVAL {
                self.regen_counter = 0;
                self.agent.health = (self.agent.health + 1.0).min(MAX_HEALTH);
            }
        }
        if self.agent.health <= 0.0 {
            self.terminated = true;
        }
        hurt
    }

    fn try_move(&mut self, to: Pos) -> bool {
        let head = [to[0], to[1] + 1, to[2]];
        if in_bounds(to) && self.grid.passable(to) && self.grid.passable(head) {
            self.agent.pos = to;
            self.settle();
        }
        true
    }

    /// Returns false when the action is invalid in the current state.
    fn apply(&mut self, action: &Action) -> bool {
        let p = self.agent.pos;
        match action {
            Action::Noop => true,
            Action::Turn(d) => {
                self.agent.facing = *d;
                true
            }
            Action::Look(pitch) => {
                self.agent.pitch = *pitch;
                true
            }
            Action::Select(n) => {
                if (*n as usize) < HOTBAR_SLOTS {
                    self.agent.slot = *n;
                    true
                } else {
                    false
                }
            }
            Action::Move(d) | Action::Jump(d) => {
                if self.gui_open() {
                    return false;
                }
                self.agent.facing = *d;
                let (dx, dz) = d.offset();
                if matches!(action, Action::Jump(_)) {
                    if !self.grid.passable([p[0], p[1] + 2, p[2]]) {
                        return true;
                    }
                    self.try_move([p[0] + dx, p[1] + 1, p[2] + dz])
                } else {
                    self.try_move([p[0] + dx, p[1], p[2] + dz])
                }
            }
            Action::Mine => {
                if self.gui_open() {
                    return false;
                }
                self.mine();
                true
            }
            Action::Place => self.place(),
            Action::OpenInventory => {
                if self.gui_open() {
                    return false;
                }
                self.open_gui(Gui::Inventory);
                true
            }
            Action::OpenStation => {
                if self.gui_open() {
                    return false;
                }
                let f = self.faced();
                match self.grid.get(f) {
                    Block::CraftingTable if in_bounds(f) => self.open_gui(Gui::Table),
                    Block::Furnace if in_bounds(f) => self.open_gui(Gui::Furnace(index(f))),
                    _ => return false,
                }
                true
            }
            Action::CloseGui => {
                if !self.gui_open() {
                    return false;
                }
                self.gui = Gui::Closed;
                self.window.gui_events.close += 1;
                true
            }
            Action::Craft(id) => self.craft(id),
            Action::SmeltLoad { input, fuel } => self.smelt_load(input.as_deref(), fuel.as_deref()),
            Action::SmeltCollect => {
                let Gui::Furnace(i) = self.gui else { return false };
                let Some(f) = self.furnaces.get_mut(&i) else { return false };
                if f.output_count == 0 {
                    return false;
                }
                let item = f.output.take().unwrap_or_default();
                let n = std::mem::take(&mut f.output_count);
                self.add_item(&item, n);
                true
            }
            Action::Use => false,
        }
    }

    fn mine(&mut self) {
        let f = self.faced();
        if !in_bounds(f) {
            return;
        }
        let b = self.grid.get(f);
        let tier = ToolTier::of_item(self.equipped());
        let Some(need) = b.break_ticks(tier) else { return };
        let i = index(f);
        let d = self.damage.entry(i).or_insert(0);
        *d += 1;
        if *d < need {
            return;
        }
        let contents = self.furnaces.get(&i).cloned();
        self.set_block(f, Block::Air);
        if let Some(item) = b.drop_item() {
            self.add_item(item, 1);
        }
        if let Some(fu) = contents {
            for (item, n) in [(fu.input, fu.input_count), (fu.fuel, fu.fuel_count), (fu.output, fu.output_count)] {
                if let Some(item) = item {
                    self.add_item(&item, n);
                }
            }
        }
        self.settle();
    }

    fn place(&mut self) -> bool {
        if self.gui_open() {
            return false;
        }
        let Some(item) = self.equipped().map(String::from) else { return false };
        let Some(b) = Block::from_placeable(&item) else { return false };
        let f = self.faced();
        let p = self.agent.pos;
        if !in_bounds(f) || self.grid.get(f) != Block::Air || f == p || f == [p[0], p[1] + 1, p[2]] {
            return false;
        }
        self.remove_item(&item, 1);
        self.set_block(f, b);
        true
    }

    fn craft(&mut self, id: &str) -> bool {
        let Some(r) = self.recipes.get(id).cloned() else { return false };
        let ok_station = match r.station {
            Station::None => matches!(self.gui, Gui::Inventory | Gui::Table),
            Station::Table => self.gui == Gui::Table,
            Station::Furnace => false,
        };
        if !ok_station || r.inputs.iter().any(|(k, n)| self.count(k) < *n) {
            return false;
        }
        for (k, n) in &r.inputs {
            self.remove_item(k, *n);
        }
        self.add_item(&r.output, r.output_count);
        self.window.crafted.push(r.output.clone());
        true
    }

    fn smelt_load(&mut self, input: Option<&str>, fuel: Option<&str>) -> bool {
        let Gui::Furnace(i) = self.gui else { return false };
        let Some(f) = self.furnaces.get(&i) else { return false };
        if let Some(inp) = input {
            let fits = f.input.as_deref().is_none_or(|cur| cur == inp);
            if !fits || smelt_output(&self.recipes, inp).is_none() || self.count(inp) == 0 {
                return false;
            }
        }
        if let Some(fu) = fuel {
            let fits = f.fuel.as_deref().is_none_or(|cur| cur == fu);
            if !fits || fuel_ticks(fu).is_none() || self.count(fu) == 0 {
                return false;
            }
        }
        if let Some(inp) = input {
            self.remove_item(inp, 1);
            let f = self.furnaces.get_mut(&i).expect("checked");
            f.input = Some(inp.to_string());
            f.input_count += 1;
        }
        if let Some(fu) = fuel {
            self.remove_item(fu, 1);
            let f = self.furnaces.get_mut(&i).expect("checked");
            f.fuel = Some(fu.to_string());
            f.fuel_count += 1;
        }
        true
    }

    /// Canonical byte dump of the full world state.
    pub fn dump(&self) -> Vec<u8> {
        crate::canon::to_line(self).expect("world serializes").into_bytes()
    }
}

/// Mean of the per-axis population variances.
pub fn mean_axis_variance(points: &[[f64; 3]]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let n = points.len() as f64;
    let mut total = 0.0;
    for axis in 0..3 {
        let mean = points.iter().map(|p| p[axis]).sum::<f64>() / n;
        total += points.iter().map(|p| (p[axis] - mean).powi(2)).sum::<f64>() / n;
    }
    total / 3.0
}

pub fn pos_from_index(i: usize) -> Pos {
    pos_of(i)
}

pub fn index_of(p: Pos) -> usize {
    index(p)
}
