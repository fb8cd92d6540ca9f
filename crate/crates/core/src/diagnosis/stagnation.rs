use serde::{Deserialize, Serialize};

use super::AttemptTrace;
use crate::sim::world::mean_axis_variance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StagnationConfig {
    pub window_k: usize,
    pub eps_nav: f64,
    pub eps_inv: u32,
    pub oscillation_net_disp: f64,
    /// Open/close cycles that count as a blocked GUI.
    pub gui_cycles: u32,
    /// Per-step movement below this counts as standing still.
    pub still_step: f64,
    /// Share of still steps in the window that makes the agent stuck.
    pub still_share: f64,
}

impl Default for StagnationConfig {
    fn default() -> Self {
        StagnationConfig {
            window_k: 20,
            eps_nav: 0.25,
            eps_inv: 0,
            oscillation_net_disp: 2.0,
            gui_cycles: 3,
            still_step: 0.05,
            still_share: 0.9,
        }
    }
}

impl StagnationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.window_k < 2 {
            return Err("window_k must be at least 2".into());
        }
        if !(self.eps_nav > 0.0) || !(self.oscillation_net_disp > 0.0) {
            return Err("eps_nav and oscillation_net_disp must be positive".into());
        }
        if self.gui_cycles == 0 {
            return Err("gui_cycles must be positive".into());
        }
        Ok(())
    }
}

/// Statistics over the final window of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub variance: f64,
    pub inv_l1: u64,
    pub net_displacement: f64,
    pub still_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("trace has {have} samples, window needs {need}")]
pub struct NotEnoughData {
    pub have: usize,
    pub need: usize,
}

fn l1(a: &crate::model::Inventory, b: &crate::model::Inventory) -> u64 {
    crate::model::inventory_delta(a, b).values().map(|d| d.unsigned_abs()).sum()
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Stats over the last `k` samples (or all of them when fewer).
pub fn window_stats(trace: &AttemptTrace, k: usize, still_step: f64) -> WindowStats {
    let steps = &trace.steps[trace.steps.len().saturating_sub(k)..];
    let coords: Vec<[f64; 3]> = steps.iter().map(|s| s.coords).collect();
    let pairs = steps.windows(2);
    let moves = pairs.len();
    let mut inv_l1 = 0;
    let mut still = 0;
    for w in steps.windows(2) {
        inv_l1 += l1(&w[0].inventory, &w[1].inventory);
        if dist(w[0].coords, w[1].coords) < still_step {
            still += 1;
        }
    }
    WindowStats {
        variance: mean_axis_variance(&coords),
        inv_l1,
        net_displacement: match (coords.first(), coords.last()) {
            (Some(a), Some(b)) => dist(*a, *b),
            _ => 0.0,
        },
        still_share: if moves == 0 { 1.0 } else { still as f64 / moves as f64 },
    }
}

/// True when the last `window_k` samples show low spatial variance and no
/// inventory change beyond `eps_inv`.
pub fn detect_stagnation(trace: &AttemptTrace, cfg: &StagnationConfig) -> Result<bool, NotEnoughData> {
    if trace.steps.len() < cfg.window_k {
        return Err(NotEnoughData { have: trace.steps.len(), need: cfg.window_k });
    }
    let s = window_stats(trace, cfg.window_k, cfg.still_step);
    Ok(s.variance < cfg.eps_nav && s.inv_l1 <= cfg.eps_inv as u64)
}
