use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ModelError;

pub type Coords = [f64; 3];
pub type Inventory = BTreeMap<String, u32>;
pub type InvDelta = BTreeMap<String, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuiState {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuiEvents {
    pub open: u32,
    pub close: u32,
}

/// Structured state read at an attempt boundary: the thirteen monitoring
/// observables plus health, hunger and the held item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub episode_id: String,
    pub coords_start: Coords,
    pub coords: Coords,
    pub coords_variance: f64,
    pub inventory: Inventory,
    pub inv_delta: InvDelta,
    pub gui_open: bool,
    pub gui_state: GuiState,
    pub gui_events: GuiEvents,
    pub world_time: u64,
    pub furnace_burn: f64,
    pub furnace_cook: f64,
    pub container_items: u32,
    pub crafted_items: Vec<String>,
    pub equipped: Option<String>,
    pub health: f64,
    pub hunger: f64,
}

impl StateSnapshot {
    /// A blank snapshot at the origin; handy for tests and fixtures.
    pub fn empty(episode_id: impl Into<String>) -> Self {
        StateSnapshot {
            episode_id: episode_id.into(),
            coords_start: [0.0; 3],
            coords: [0.0; 3],
            coords_variance: 0.0,
            inventory: Inventory::new(),
            inv_delta: InvDelta::new(),
            gui_open: false,
            gui_state: GuiState::Closed,
            gui_events: GuiEvents::default(),
            world_time: 0,
            furnace_burn: 0.0,
            furnace_cook: 0.0,
            container_items: 0,
            crafted_items: Vec::new(),
            equipped: None,
            health: 20.0,
            hunger: 20.0,
        }
    }

    pub fn count(&self, item: &str) -> u32 {
        self.inventory.get(item).copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidSnapshot(msg.to_string()));
        if self.gui_open != (self.gui_state == GuiState::Open) {
            return bad("gui_open disagrees with gui_state");
        }
        if !(self.coords_variance >= 0.0) || !self.coords_variance.is_finite() {
            return bad("coords_variance must be finite and nonnegative");
        }
        if self.coords.iter().chain(self.coords_start.iter()).any(|c| !c.is_finite()) {
            return bad("coordinates must be finite");
        }
        if !(0.0..=20.0).contains(&self.health) || !(0.0..=20.0).contains(&self.hunger) {
            return bad("health and hunger must lie in [0, 20]");
        }
        if self.furnace_burn < 0.0 || self.furnace_cook < 0.0 {
            return bad("furnace progress must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuiTransition {
    pub from_open: bool,
    pub to_open: bool,
}

/// Structured state difference between two snapshots of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDiff {
    /// post - pre per item, zero entries omitted.
    pub inventory: InvDelta,
    pub displacement: Coords,
    pub gui: GuiTransition,
    pub world_time_delta: i64,
}

impl StateDiff {
    pub fn inventory_l1(&self) -> i64 {
        self.inventory.values().map(|d| d.abs()).sum()
    }

    pub fn net_displacement(&self) -> f64 {
        self.displacement.iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.inventory.is_empty()
            && self.displacement == [0.0; 3]
            && self.world_time_delta == 0
            && self.gui.from_open == self.gui.to_open
    }
}

/// Per-item difference `post - pre`, zero entries omitted.
pub fn inventory_delta(pre: &Inventory, post: &Inventory) -> InvDelta {
    let mut out = InvDelta::new();
    for key in pre.keys().chain(post.keys()) {
        if out.contains_key(key) {
            continue;
        }
        let d = i64::from(post.get(key).copied().unwrap_or(0)) - i64::from(pre.get(key).copied().unwrap_or(0));
        if d != 0 {
            out.insert(key.clone(), d);
        }
    }
    out
}

pub fn compute_state_diff(pre: &StateSnapshot, post: &StateSnapshot) -> Result<StateDiff, ModelError> {
    if pre.episode_id != post.episode_id {
        return Err(ModelError::EpisodeMismatch { pre: pre.episode_id.clone(), post: post.episode_id.clone() });
    }
    let displacement = [post.coords[0] - pre.coords[0], post.coords[1] - pre.coords[1], post.coords[2] - pre.coords[2]];
    Ok(StateDiff {
        inventory: inventory_delta(&pre.inventory, &post.inventory),
        displacement,
        gui: GuiTransition { from_open: pre.gui_open, to_open: post.gui_open },
        world_time_delta: post.world_time as i64 - pre.world_time as i64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inv(pairs: &[(&str, u32)]) -> Inventory {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn snap(pairs: &[(&str, u32)]) -> StateSnapshot {
        let mut s = StateSnapshot::empty("ep");
        s.inventory = inv(pairs);
        s
    }

    #[test]
    fn single_gain() {
        let d = compute_state_diff(&snap(&[]), &snap(&[("oak_log", 1)])).unwrap();
        assert_eq!(d.inventory, InvDelta::from([("oak_log".to_string(), 1)]));
    }

    #[test]
    fn identity_is_zero() {
        let a = snap(&[("plank", 3)]);
        let d = compute_state_diff(&a, &a).unwrap();
        assert!(d.is_zero());
        assert_eq!(d.displacement, [0.0; 3]);
    }

    #[test]
    fn wooden_pickaxe_recipe_delta() {
        // 3 plank + 2 stick -> wooden_pickaxe
        let pre = snap(&[("plank", 4), ("stick", 2)]);
        let post = snap(&[("plank", 1), ("stick", 0), ("wooden_pickaxe", 1)]);
        let d = compute_state_diff(&pre, &post).unwrap();
        let want: InvDelta =
            [("plank", -3), ("stick", -2), ("wooden_pickaxe", 1)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        assert_eq!(d.inventory, want);
    }

    #[test]
    fn episodes_must_match() {
        let a = StateSnapshot::empty("a");
        let b = StateSnapshot::empty("b");
        assert!(matches!(compute_state_diff(&a, &b), Err(ModelError::EpisodeMismatch { .. })));
    }

    fn arb_inv() -> impl Strategy<Value = Inventory> {
        proptest::collection::btree_map(
            prop::sample::select(crate::sim::items::ITEMS.to_vec()).prop_map(String::from),
            0u32..20,
            0..6,
        )
    }

    proptest! {
        #[test]
        fn diff_is_antisymmetric(a in arb_inv(), b in arb_inv()) {
            let mut sa = StateSnapshot::empty("e");
            sa.inventory = a;
            let mut sb = StateSnapshot::empty("e");
            sb.inventory = b;
            let ab = compute_state_diff(&sa, &sb).unwrap().inventory;
            let ba = compute_state_diff(&sb, &sa).unwrap().inventory;
            let neg: InvDelta = ba.into_iter().map(|(k, v)| (k, -v)).collect();
            prop_assert_eq!(ab, neg);
        }

        #[test]
        fn self_diff_is_zero(a in arb_inv(), x in -50.0f64..50.0) {
            let mut s = StateSnapshot::empty("e");
            s.inventory = a;
            s.coords = [x, 4.0, -x];
            prop_assert!(compute_state_diff(&s, &s).unwrap().is_zero());
        }
    }
}
