//! Breadth-first navigation over standable cells.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::recall::spatial_hash;
use crate::sim::world::{in_bounds, Grid, Pos};
use crate::sim::{Action, Dir};

/// Cells the navigator must keep out of.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NavRules {
    pub avoid_hazard: bool,
    pub avoid_cells: BTreeSet<u64>,
}

impl NavRules {
    pub fn from_constraints(constraints: &[String]) -> Self {
        NavRules {
            avoid_hazard: constraints.iter().any(|c| c == "avoid_hazard"),
            avoid_cells: constraints.iter().filter_map(|c| crate::planner::parse_cell_constraint(c)).collect(),
        }
    }

    fn allows(&self, grid: &Grid, p: Pos, cells: bool) -> bool {
        if self.avoid_hazard && grid.near_lava(p) {
            return false;
        }
        if cells && !self.avoid_cells.is_empty() {
            let c = [p[0] as f64, p[1] as f64, p[2] as f64];
            if spatial_hash(c).is_some_and(|h| self.avoid_cells.contains(&h)) {
                return false;
            }
        }
        true
    }
}

fn drop_to(grid: &Grid, mut p: Pos) -> Option<Pos> {
    while p[1] > 1 && grid.passable([p[0], p[1] - 1, p[2]]) {
        p[1] -= 1;
    }
    let fluid = grid.get(p).is_fluid() || grid.get([p[0], p[1] + 1, p[2]]).is_fluid();
    (in_bounds(p) && !fluid).then_some(p)
}

/// Moves available from `p` and where each one lands.
pub fn moves(grid: &Grid, p: Pos) -> Vec<(Action, Pos)> {
    let mut out = Vec::with_capacity(4);
    for d in Dir::ALL {
        let (dx, dz) = d.offset();
        let t = [p[0] + dx, p[1], p[2] + dz];
        if in_bounds(t) && grid.passable(t) && grid.passable([t[0], t[1] + 1, t[2]]) {
            if let Some(l) = drop_to(grid, t) {
                out.push((Action::Move(d), l));
            }
            continue;
        }
        let up = [t[0], t[1] + 1, t[2]];
        if grid.passable([p[0], p[1] + 2, p[2]])
            && in_bounds(up)
            && grid.passable(up)
            && grid.passable([up[0], up[1] + 1, up[2]])
        {
            if let Some(l) = drop_to(grid, up) {
                out.push((Action::Jump(d), l));
            }
        }
    }
    out
}

fn search(
    grid: &Grid,
    start: Pos,
    rules: &NavRules,
    cells: bool,
    goal: &dyn Fn(Pos) -> bool,
) -> Option<(Pos, Vec<Action>)> {
    let mut prev: HashMap<Pos, (Pos, Action)> = HashMap::new();
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        if goal(p) && (p == start || rules.allows(grid, p, cells)) {
            let mut path = Vec::new();
            let mut cur = p;
            while let Some((from, a)) = prev.get(&cur) {
                path.push(a.clone());
                cur = *from;
            }
            path.reverse();
            return Some((p, path));
        }
        for (a, q) in moves(grid, p) {
            if rules.allows(grid, q, cells) && seen.insert(q) {
                prev.insert(q, (p, a));
                queue.push_back(q);
            }
        }
    }
    None
}

/// Shortest action path to the nearest cell satisfying `goal`. Avoided
/// spatial cells are dropped as a last resort; hazard avoidance never is.
pub fn find_path(grid: &Grid, start: Pos, rules: &NavRules, goal: &dyn Fn(Pos) -> bool) -> Option<(Pos, Vec<Action>)> {
    search(grid, start, rules, true, goal).or_else(|| {
        if rules.avoid_cells.is_empty() {
            None
        } else {
            search(grid, start, rules, false, goal)
        }
    })
}

/// Direction and pitch from which a standing agent at `p` aims at `block`.
pub fn aim(p: Pos, block: Pos) -> Option<(Dir, crate::sim::Pitch)> {
    let d = Dir::from_offset(block[0] - p[0], block[2] - p[2])?;
    let pitch = match block[1] - p[1] {
        1 => crate::sim::Pitch::Up,
        0 => crate::sim::Pitch::Level,
        -1 => crate::sim::Pitch::Down,
        _ => return None,
    };
    Some((d, pitch))
}

/// Blocks an agent standing at `p` can aim at, level first.
pub fn reachable_blocks(p: Pos) -> impl Iterator<Item = Pos> {
    [0, 1, -1].into_iter().flat_map(move |dy| {
        Dir::ALL.into_iter().map(move |d| {
            let (dx, dz) = d.offset();
            [p[0] + dx, p[1] + dy, p[2] + dz]
        })
    })
}
