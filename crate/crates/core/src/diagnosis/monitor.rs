use crate::model::{CheckKind, CheckSpec, SchemaError, StateSnapshot};

/// Conjunction of compiled checks over a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitor {
    checks: Vec<CheckSpec>,
}

pub fn compile_checks(checks: &[CheckSpec]) -> Result<Monitor, SchemaError> {
    for (i, c) in checks.iter().enumerate() {
        c.validate(&format!("checks[{i}]"))?;
    }
    Ok(Monitor { checks: checks.to_vec() })
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Evaluate one check. Unresolved anchors never hold.
pub fn check_holds(c: &CheckSpec, s: &StateSnapshot) -> bool {
    let n = c.n.unwrap_or(1);
    let item = c.item.as_deref().unwrap_or("");
    match c.kind {
        CheckKind::InvGe => s.count(item) as i64 >= n,
        CheckKind::InvDeltaGe => s.inv_delta.get(item).copied().unwrap_or(0) >= n,
        CheckKind::EquippedIs => s.equipped.as_deref() == Some(item),
        CheckKind::CoordNear => match (c.target, c.radius) {
            (Some(t), Some(r)) => dist(s.coords, t) <= r,
            _ => false,
        },
        CheckKind::CoordMovedGe => dist(s.coords, s.coords_start) >= n as f64,
        CheckKind::GuiIsOpen => s.gui_open,
        CheckKind::GuiIsClosed => !s.gui_open,
        CheckKind::GuiEventsGe => (s.gui_events.open + s.gui_events.close) as i64 >= n,
        CheckKind::WorldTimeGe => s.world_time as i64 >= n,
        CheckKind::FurnaceBurnActive => s.furnace_burn > 0.0,
        CheckKind::FurnaceCookGe => s.furnace_cook >= n as f64,
        CheckKind::ContainerCountGe => s.container_items as i64 >= n,
        CheckKind::CraftedContains => s.crafted_items.iter().any(|i| i == item),
    }
}

impl Monitor {
    pub fn eval(&self, s: &StateSnapshot) -> bool {
        self.checks.iter().all(|c| check_holds(c, s))
    }

    pub fn checks(&self) -> &[CheckSpec] {
        &self.checks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjunction() {
        let mut s = StateSnapshot::empty("e");
        s.inventory.insert("oak_log".into(), 2);
        s.gui_open = true;
        let m = compile_checks(&[CheckSpec::inv_ge("oak_log", 2), CheckSpec::bare(CheckKind::GuiIsClosed)]).unwrap();
        assert!(!m.eval(&s));
        s.gui_open = false;
        assert!(m.eval(&s));
        assert!(compile_checks(&[]).unwrap().eval(&s));
    }

    #[test]
    fn invalid_check_rejected() {
        let bad = CheckSpec::bare(CheckKind::InvGe);
        assert!(compile_checks(&[bad]).is_err());
    }
}
