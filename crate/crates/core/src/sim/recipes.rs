//! Recipe registry and the item-dependency graph built from it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::items::{Block, ToolTier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Station {
    /// Craftable in the 2x2 inventory grid.
    None,
    /// Needs the 3x3 crafting-table grid.
    Table,
    Furnace,
}

impl Station {
    /// The placeable block item that provides this station.
    pub fn item(self) -> Option<&'static str> {
        match self {
            Station::None => None,
            Station::Table => Some("crafting_table"),
            Station::Furnace => Some("furnace"),
        }
    }

    pub fn block(self) -> Option<Block> {
        match self {
            Station::None => None,
            Station::Table => Some(Block::CraftingTable),
            Station::Furnace => Some(Block::Furnace),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub id: String,
    pub inputs: BTreeMap<String, u32>,
    pub station: Station,
    pub output: String,
    pub output_count: u32,
    /// Fuel item consumed once per output for furnace recipes.
    pub fuel: Option<String>,
}

/// Ticks of furnace burn one unit of a fuel item provides.
pub fn fuel_ticks(item: &str) -> Option<u32> {
    match item {
        "plank" | "oak_log" => Some(15),
        "stick" => Some(5),
        _ => None,
    }
}

/// Ticks of burn needed to cook one item.
pub const COOK_TICKS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeGraph {
    recipes: Vec<Recipe>,
}

fn recipe(id: &str, inputs: &[(&str, u32)], station: Station, out: u32, fuel: Option<&str>) -> Recipe {
    Recipe {
        id: id.to_string(),
        inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        station,
        output: id.to_string(),
        output_count: out,
        fuel: fuel.map(String::from),
    }
}

impl Default for RecipeGraph {
    fn default() -> Self {
        RecipeGraph::shipped()
    }
}

impl RecipeGraph {
    /// The registry every gridworld instance uses.
    pub fn shipped() -> Self {
        let mut recipes = vec![
            recipe("plank", &[("oak_log", 1)], Station::None, 4, None),
            recipe("stick", &[("plank", 2)], Station::None, 4, None),
            recipe("crafting_table", &[("plank", 4)], Station::None, 1, None),
            recipe("wooden_pickaxe", &[("plank", 3), ("stick", 2)], Station::Table, 1, None),
            recipe("stone_pickaxe", &[("cobblestone", 3), ("stick", 2)], Station::Table, 1, None),
            recipe("furnace", &[("cobblestone", 8)], Station::Table, 1, None),
            recipe("iron_ingot", &[("iron_ore", 1)], Station::Furnace, 1, Some("plank")),
            recipe("iron_pickaxe", &[("iron_ingot", 3), ("stick", 2)], Station::Table, 1, None),
        ];
        recipes.sort_by(|a, b| a.id.cmp(&b.id));
        RecipeGraph { recipes }
    }

    pub fn recipes(&self) -> &[Recipe] {
        &self.recipes
    }

    pub fn get(&self, id: &str) -> Option<&Recipe> {
        self.recipes.iter().find(|r| r.id == id)
    }

    /// Recipe producing `item`; ties go to the lexicographically smallest id.
    pub fn recipe_for(&self, item: &str) -> Option<&Recipe> {
        self.recipes.iter().filter(|r| r.output == item).min_by(|a, b| a.id.cmp(&b.id))
    }

    /// Item is obtained by mining rather than crafting.
    pub fn is_raw(&self, item: &str) -> bool {
        self.recipe_for(item).is_none() && !Block::sources_of(item).is_empty()
    }

    /// Weakest tool tier that yields `item` from its source block.
    pub fn mining_tier(&self, item: &str) -> Option<ToolTier> {
        Block::sources_of(item).iter().filter_map(|b| b.required_tier()).min()
    }

    /// Direct prerequisites of `item`: recipe inputs, fuel, station item,
    /// and for raw items the pickaxe needed to mine them.
    pub fn prerequisites(&self, item: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Some(r) = self.recipe_for(item) {
            out.extend(r.inputs.keys().cloned());
            if let Some(f) = &r.fuel {
                out.insert(f.clone());
            }
            if let Some(s) = r.station.item() {
                out.insert(s.to_string());
            }
        } else if let Some(tool) = self.mining_tier(item).and_then(|t| t.tool_item()) {
            out.insert(tool.to_string());
        }
        out
    }

    /// Every item `goal` transitively depends on (excluding `goal` itself).
    pub fn closure(&self, goal: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![goal.to_string()];
        while let Some(it) = stack.pop() {
            for p in self.prerequisites(&it) {
                if seen.insert(p.clone()) {
                    stack.push(p);
                }
            }
        }
        seen.remove(goal);
        seen
    }

    /// True when the dependency graph has no cycles.
    pub fn is_acyclic(&self) -> bool {
        let items: BTreeSet<String> = self
            .recipes
            .iter()
            .flat_map(|r| r.inputs.keys().cloned().chain(std::iter::once(r.output.clone())))
            .collect();
        items.iter().all(|i| !self.closure(i).contains(i))
    }

    /// Goal-reachable: every leaf of the closure is minable.
    pub fn is_obtainable(&self, item: &str) -> bool {
        if self.is_raw(item) {
            return true;
        }
        match self.recipe_for(item) {
            None => false,
            Some(_) => self.prerequisites(item).iter().all(|p| self.is_obtainable(p)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_graph_is_acyclic() {
        assert!(RecipeGraph::shipped().is_acyclic());
    }

    #[test]
    fn closure_of_wooden_pickaxe() {
        let g = RecipeGraph::shipped();
        let c: Vec<_> = g.closure("wooden_pickaxe").into_iter().collect();
        assert_eq!(c, vec!["crafting_table", "oak_log", "plank", "stick"]);
    }

    #[test]
    fn iron_needs_furnace_and_stone_pickaxe() {
        let g = RecipeGraph::shipped();
        let c = g.closure("iron_pickaxe");
        for needed in ["furnace", "stone_pickaxe", "wooden_pickaxe", "iron_ore", "cobblestone", "crafting_table"] {
            assert!(c.contains(needed), "{needed}");
        }
        assert!(g.is_obtainable("iron_pickaxe"));
    }

    #[test]
    fn raw_items() {
        let g = RecipeGraph::shipped();
        assert!(g.is_raw("oak_log"));
        assert!(g.is_raw("iron_ore"));
        assert!(!g.is_raw("plank"));
        assert_eq!(g.mining_tier("iron_ore"), Some(ToolTier::Stone));
        assert_eq!(g.mining_tier("cobblestone"), Some(ToolTier::Wooden));
    }
}
