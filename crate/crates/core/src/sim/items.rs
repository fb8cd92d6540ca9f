//! Closed item and block registry.

use serde::{Deserialize, Serialize};

/// Every item name the engine knows about. Lowercase snake_case, sorted.
pub const ITEMS: &[&str] = &[
    "cobblestone",
    "crafting_table",
    "dirt",
    "furnace",
    "iron_ingot",
    "iron_ore",
    "iron_pickaxe",
    "oak_log",
    "plank",
    "stick",
    "stone_pickaxe",
    "wooden_pickaxe",
];

pub fn is_known_item(name: &str) -> bool {
    ITEMS.binary_search(&name).is_ok()
}

/// Mining tool tier, ordered weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolTier {
    Hand,
    Wooden,
    Stone,
    Iron,
}

impl ToolTier {
    pub fn of_item(item: Option<&str>) -> ToolTier {
        match item {
            Some("wooden_pickaxe") => ToolTier::Wooden,
            Some("stone_pickaxe") => ToolTier::Stone,
            Some("iron_pickaxe") => ToolTier::Iron,
            _ => ToolTier::Hand,
        }
    }

    pub fn tool_item(self) -> Option<&'static str> {
        match self {
            ToolTier::Hand => None,
            ToolTier::Wooden => Some("wooden_pickaxe"),
            ToolTier::Stone => Some("stone_pickaxe"),
            ToolTier::Iron => Some("iron_pickaxe"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Block {
    Air = 0,
    Dirt,
    Grass,
    Stone,
    Cobblestone,
    OakLog,
    IronOre,
    Lava,
    Water,
    CraftingTable,
    Furnace,
    Bedrock,
}

impl Block {
    pub const ALL: [Block; 12] = [
        Block::Air,
        Block::Dirt,
        Block::Grass,
        Block::Stone,
        Block::Cobblestone,
        Block::OakLog,
        Block::IronOre,
        Block::Lava,
        Block::Water,
        Block::CraftingTable,
        Block::Furnace,
        Block::Bedrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Air => "air",
            Block::Dirt => "dirt",
            Block::Grass => "grass",
            Block::Stone => "stone",
            Block::Cobblestone => "cobblestone",
            Block::OakLog => "oak_log",
            Block::IronOre => "iron_ore",
            Block::Lava => "lava",
            Block::Water => "water",
            Block::CraftingTable => "crafting_table",
            Block::Furnace => "furnace",
            Block::Bedrock => "bedrock",
        }
    }

    pub fn from_name(name: &str) -> Option<Block> {
        Block::ALL.iter().copied().find(|b| b.name() == name)
    }

    /// Agent can stand on / is blocked by this block.
    pub fn is_solid(self) -> bool {
        !matches!(self, Block::Air | Block::Lava | Block::Water)
    }

    pub fn is_fluid(self) -> bool {
        matches!(self, Block::Lava | Block::Water)
    }

    /// Minimum tool tier for the block to yield a drop; `None` when unbreakable.
    pub fn required_tier(self) -> Option<ToolTier> {
        match self {
            Block::Dirt | Block::Grass | Block::OakLog | Block::CraftingTable => Some(ToolTier::Hand),
            Block::Stone | Block::Cobblestone | Block::Furnace => Some(ToolTier::Wooden),
            Block::IronOre => Some(ToolTier::Stone),
            Block::Air | Block::Lava | Block::Water | Block::Bedrock => None,
        }
    }

    /// Ticks of continuous mining needed with the given tool; `None` when the
    /// tool cannot break it.
    pub fn break_ticks(self, tier: ToolTier) -> Option<u32> {
        let need = self.required_tier()?;
        if tier < need {
            return None;
        }
        Some(match self {
            Block::Dirt | Block::Grass | Block::OakLog => 10,
            Block::CraftingTable => 15,
            Block::Stone | Block::Cobblestone | Block::Furnace => match tier {
                ToolTier::Wooden => 30,
                ToolTier::Stone => 15,
                _ => 10,
            },
            Block::IronOre => match tier {
                ToolTier::Stone => 30,
                _ => 20,
            },
            _ => return None,
        })
    }

    /// Item granted when the block breaks.
    pub fn drop_item(self) -> Option<&'static str> {
        match self {
            Block::Dirt | Block::Grass => Some("dirt"),
            Block::Stone | Block::Cobblestone => Some("cobblestone"),
            Block::OakLog => Some("oak_log"),
            Block::IronOre => Some("iron_ore"),
            Block::CraftingTable => Some("crafting_table"),
            Block::Furnace => Some("furnace"),
            _ => None,
        }
    }

    /// Block placed from an inventory item.
    pub fn from_placeable(item: &str) -> Option<Block> {
        match item {
            "dirt" => Some(Block::Dirt),
            "cobblestone" => Some(Block::Cobblestone),
            "oak_log" => Some(Block::OakLog),
            "crafting_table" => Some(Block::CraftingTable),
            "furnace" => Some(Block::Furnace),
            _ => None,
        }
    }

    /// Blocks whose drop is `item` (what a "mine <item>" subgoal should target).
    pub fn sources_of(item: &str) -> &'static [Block] {
        match item {
            "oak_log" => &[Block::OakLog],
            "cobblestone" => &[Block::Stone, Block::Cobblestone],
            "iron_ore" => &[Block::IronOre],
            "dirt" => &[Block::Dirt, Block::Grass],
            _ => &[],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_sorted_and_searchable() {
        let mut sorted = ITEMS.to_vec();
        sorted.sort();
        assert_eq!(sorted, ITEMS);
        assert!(is_known_item("oak_log"));
        assert!(!is_known_item("unobtainium"));
    }

    #[test]
    fn tool_gating() {
        assert_eq!(Block::Stone.break_ticks(ToolTier::Hand), None);
        assert_eq!(Block::Stone.break_ticks(ToolTier::Wooden), Some(30));
        assert_eq!(Block::Stone.break_ticks(ToolTier::Stone), Some(15));
        assert_eq!(Block::IronOre.break_ticks(ToolTier::Wooden), None);
        assert_eq!(Block::IronOre.break_ticks(ToolTier::Stone), Some(30));
        assert_eq!(Block::OakLog.break_ticks(ToolTier::Hand), Some(10));
        assert_eq!(Block::Bedrock.break_ticks(ToolTier::Iron), None);
    }

    #[test]
    fn block_names_roundtrip() {
        for b in Block::ALL {
            assert_eq!(Block::from_name(b.name()), Some(b));
        }
    }
}
