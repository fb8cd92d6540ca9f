//! Seeded terrain: flat layers, a stone ridge carrying an iron vein, trees, lava.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::items::Block;
use super::world::{Grid, Pos, World, DEPTH, WIDTH};

pub const GROUND_Y: i32 = 3;
pub const SURFACE_Y: i32 = 4;
pub const TREE_COUNT: usize = 8;
pub const TRUNK_HEIGHT: i32 = 2;
pub const TREE_SPACING: f64 = 4.0;
pub const RIDGE_LEN: i32 = 6;
pub const RIDGE_DEPTH: i32 = 3;
pub const VEIN_LEN: i32 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerrainConfig {
    /// Put the lava pool right beside part of the iron vein.
    pub hazard: bool,
}

/// Landmarks recorded during generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub spawn: Pos,
    pub ridge_min: Pos,
    pub ridge_max: Pos,
    pub ores: Vec<Pos>,
    pub trees: Vec<Pos>,
    pub lava: Vec<Pos>,
}

struct Rect {
    x0: i32,
    z0: i32,
    x1: i32,
    z1: i32,
}

impl Rect {
    fn gap(&self, x: i32, z: i32) -> i32 {
        let dx = (self.x0 - x).max(x - self.x1).max(0);
        let dz = (self.z0 - z).max(z - self.z1).max(0);
        dx.max(dz)
    }
}

pub fn generate(seed: u64, cfg: TerrainConfig) -> (World, Layout) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = Grid::filled(Block::Air);
    for x in 0..WIDTH {
        for z in 0..DEPTH {
            grid.set([x, 0, z], Block::Bedrock);
            grid.set([x, 1, z], Block::Stone);
            grid.set([x, 2, z], Block::Dirt);
            grid.set([x, GROUND_Y, z], Block::Grass);
        }
    }
    let spawn = [WIDTH / 2, SURFACE_Y, DEPTH / 2];

    let along_x: bool = rng.gen();
    let (sx, sz) = if along_x { (RIDGE_LEN, RIDGE_DEPTH) } else { (RIDGE_DEPTH, RIDGE_LEN) };
    let ridge = loop {
        let x0 = rng.gen_range(4..WIDTH - 4 - sx);
        let z0 = rng.gen_range(4..DEPTH - 4 - sz);
        let r = Rect { x0, z0, x1: x0 + sx - 1, z1: z0 + sz - 1 };
        let g = r.gap(spawn[0], spawn[2]);
        if (5..=9).contains(&g) {
            break r;
        }
    };
    for x in ridge.x0..=ridge.x1 {
        for z in ridge.z0..=ridge.z1 {
            for y in SURFACE_Y..SURFACE_Y + 2 {
                grid.set([x, y, z], Block::Stone);
            }
        }
    }

    // Vein runs along one long face; `normal` points away from the ridge.
    let far_side: bool = rng.gen();
    let start = rng.gen_range(0..=RIDGE_LEN - VEIN_LEN);
    let (face, normal): (Box<dyn Fn(i32) -> (i32, i32)>, (i32, i32)) = if along_x {
        let z = if far_side { ridge.z1 } else { ridge.z0 };
        let n = if far_side { (0, 1) } else { (0, -1) };
        (Box::new(move |i| (ridge.x0 + i, z)), n)
    } else {
        let x = if far_side { ridge.x1 } else { ridge.x0 };
        let n = if far_side { (1, 0) } else { (-1, 0) };
        (Box::new(move |i| (x, ridge.z0 + i)), n)
    };
    let mut ores = Vec::new();
    for i in start..start + VEIN_LEN {
        let (x, z) = face(i);
        grid.set([x, SURFACE_Y, z], Block::IronOre);
        ores.push([x, SURFACE_Y, z]);
    }

    let mut lava = Vec::new();
    if cfg.hazard {
        // Two cells just past one end of the vein, two and three rows out:
        // only the end ore's approach cell touches them.
        let from_low: bool = rng.gen();
        let i = if from_low { start - 1 } else { start + VEIN_LEN };
        let (x, z) = face(i);
        for row in [2, 3] {
            let p = [x + normal.0 * row, GROUND_Y, z + normal.1 * row];
            grid.set(p, Block::Lava);
            lava.push(p);
        }
    } else {
        for _ in 0..200 {
            let x = rng.gen_range(2..WIDTH - 3);
            let z = rng.gen_range(2..DEPTH - 3);
            let r = Rect { x0: x, z0: z, x1: x + 1, z1: z + 1 };
            if r.gap(spawn[0], spawn[2]) >= 6 && gap_rect(&ridge, &r) >= 4 {
                for dx in 0..2 {
                    for dz in 0..2 {
                        let p = [x + dx, GROUND_Y, z + dz];
                        grid.set(p, Block::Lava);
                        lava.push(p);
                    }
                }
                break;
            }
        }
    }

    let mut trees: Vec<Pos> = Vec::new();
    for _ in 0..2000 {
        if trees.len() == TREE_COUNT {
            break;
        }
        let x = rng.gen_range(2..WIDTH - 2);
        let z = rng.gen_range(2..DEPTH - 2);
        let clear_spawn = (x - spawn[0]).abs().max((z - spawn[2]).abs()) >= 3;
        let clear_ridge = ridge.gap(x, z) >= 4;
        let clear_lava = lava.iter().all(|l| (l[0] - x).abs().max((l[2] - z).abs()) >= 3);
        let spaced = trees.iter().all(|t| {
            let (dx, dz) = ((t[0] - x) as f64, (t[2] - z) as f64);
            (dx * dx + dz * dz).sqrt() >= TREE_SPACING
        });
        if clear_spawn && clear_ridge && clear_lava && spaced {
            for y in SURFACE_Y..SURFACE_Y + TRUNK_HEIGHT {
                grid.set([x, y, z], Block::OakLog);
            }
            trees.push([x, SURFACE_Y, z]);
        }
    }

    let layout = Layout {
        spawn,
        ridge_min: [ridge.x0, SURFACE_Y, ridge.z0],
        ridge_max: [ridge.x1, SURFACE_Y + 1, ridge.z1],
        ores,
        trees,
        lava,
    };
    (World::new(seed, grid, spawn), layout)
}

fn gap_rect(a: &Rect, b: &Rect) -> i32 {
    let dx = (a.x0 - b.x1).max(b.x0 - a.x1).max(0);
    let dz = (a.z0 - b.z1).max(b.z0 - a.z1).max(0);
    dx.max(dz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_world() {
        for seed in 0..5 {
            let (a, _) = generate(seed, TerrainConfig::default());
            let (b, _) = generate(seed, TerrainConfig::default());
            assert_eq!(a.dump(), b.dump());
        }
    }

    #[test]
    fn layout_has_everything() {
        for seed in 0..40 {
            for hazard in [false, true] {
                let (w, l) = generate(seed, TerrainConfig { hazard });
                assert_eq!(l.trees.len(), TREE_COUNT, "seed {seed}");
                assert_eq!(l.ores.len(), VEIN_LEN as usize);
                assert!(!l.lava.is_empty());
                assert!(w.grid.standable(w.agent.pos));
                assert!(!w.grid.near_lava(w.agent.pos));
            }
        }
    }

    #[test]
    fn hazard_sits_by_the_vein() {
        for seed in 0..20 {
            let (w, l) = generate(seed, TerrainConfig { hazard: true });
            let exposed: Vec<bool> = l
                .ores
                .iter()
                .map(|o| {
                    crate::sim::action::Dir::ALL.iter().any(|d| {
                        let (dx, dz) = d.offset();
                        let p = [o[0] + dx, o[1], o[2] + dz];
                        w.grid.standable(p) && w.grid.near_lava(p)
                    })
                })
                .collect();
            assert_eq!(exposed.iter().filter(|e| **e).count(), 1, "seed {seed}");
        }
    }
}
