use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::plan::{field, opt_field};
use super::SchemaError;
use crate::sim::items::is_known_item;

/// One check kind per monitored observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    InvGe,
    InvDeltaGe,
    EquippedIs,
    CoordNear,
    CoordMovedGe,
    GuiIsOpen,
    GuiIsClosed,
    GuiEventsGe,
    WorldTimeGe,
    FurnaceBurnActive,
    FurnaceCookGe,
    ContainerCountGe,
    CraftedContains,
}

impl CheckKind {
    pub const ALL: [CheckKind; 13] = [
        CheckKind::InvGe,
        CheckKind::InvDeltaGe,
        CheckKind::EquippedIs,
        CheckKind::CoordNear,
        CheckKind::CoordMovedGe,
        CheckKind::GuiIsOpen,
        CheckKind::GuiIsClosed,
        CheckKind::GuiEventsGe,
        CheckKind::WorldTimeGe,
        CheckKind::FurnaceBurnActive,
        CheckKind::FurnaceCookGe,
        CheckKind::ContainerCountGe,
        CheckKind::CraftedContains,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::InvGe => "inv_ge",
            CheckKind::InvDeltaGe => "inv_delta_ge",
            CheckKind::EquippedIs => "equipped_is",
            CheckKind::CoordNear => "coord_near",
            CheckKind::CoordMovedGe => "coord_moved_ge",
            CheckKind::GuiIsOpen => "gui_is_open",
            CheckKind::GuiIsClosed => "gui_is_closed",
            CheckKind::GuiEventsGe => "gui_events_ge",
            CheckKind::WorldTimeGe => "world_time_ge",
            CheckKind::FurnaceBurnActive => "furnace_burn_active",
            CheckKind::FurnaceCookGe => "furnace_cook_ge",
            CheckKind::ContainerCountGe => "container_count_ge",
            CheckKind::CraftedContains => "crafted_contains",
        }
    }

    pub fn parse(s: &str) -> Option<CheckKind> {
        CheckKind::ALL.iter().copied().find(|k| k.as_str() == s)
    }

    fn needs_item(self) -> bool {
        matches!(self, CheckKind::InvGe | CheckKind::InvDeltaGe | CheckKind::EquippedIs | CheckKind::CraftedContains)
    }

    /// Minimum allowed `n`, or `None` when the kind takes no threshold.
    fn min_n(self) -> Option<i64> {
        match self {
            CheckKind::InvGe
            | CheckKind::InvDeltaGe
            | CheckKind::CoordMovedGe
            | CheckKind::GuiEventsGe
            | CheckKind::FurnaceCookGe
            | CheckKind::ContainerCountGe => Some(1),
            CheckKind::WorldTimeGe => Some(0),
            _ => None,
        }
    }
}

/// A single predicate over a [`super::StateSnapshot`].
///
/// `anchor` stands in for `target` in distilled skills, where absolute
/// coordinates are replaced by a symbolic placeholder such as
/// `nearest:crafting_table`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    #[serde(rename = "type")]
    pub kind: CheckKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
}

impl CheckSpec {
    pub fn bare(kind: CheckKind) -> Self {
        CheckSpec { kind, item: None, n: None, target: None, radius: None, anchor: None }
    }

    pub fn inv_ge(item: &str, n: i64) -> Self {
        CheckSpec { item: Some(item.to_string()), n: Some(n), ..CheckSpec::bare(CheckKind::InvGe) }
    }

    pub fn with_item(kind: CheckKind, item: &str) -> Self {
        CheckSpec { item: Some(item.to_string()), ..CheckSpec::bare(kind) }
    }

    pub fn with_n(kind: CheckKind, n: i64) -> Self {
        CheckSpec { n: Some(n), ..CheckSpec::bare(kind) }
    }

    pub fn coord_near(target: [f64; 3], radius: f64) -> Self {
        CheckSpec { target: Some(target), radius: Some(radius), ..CheckSpec::bare(CheckKind::CoordNear) }
    }

    /// Enforce the kind-dependent field requirements.
    pub fn validate(&self, path: &str) -> Result<(), SchemaError> {
        if self.kind.needs_item() {
            match &self.item {
                None => return Err(SchemaError::new(format!("{path}.item"), "missing required field")),
                Some(item) if !is_known_item(item) => {
                    return Err(SchemaError::new(format!("{path}.item"), format!("unknown item '{item}'")))
                }
                _ => {}
            }
        } else if let Some(item) = &self.item {
            if !is_known_item(item) {
                return Err(SchemaError::new(format!("{path}.item"), format!("unknown item '{item}'")));
            }
        }
        if let Some(min) = self.kind.min_n() {
            match self.n {
                None => return Err(SchemaError::new(format!("{path}.n"), "missing required field")),
                Some(n) if n < min => {
                    return Err(SchemaError::new(format!("{path}.n"), format!("must be >= {min}, got {n}")))
                }
                _ => {}
            }
        }
        if self.kind == CheckKind::CoordNear {
            match (&self.target, &self.anchor) {
                (None, None) => return Err(SchemaError::new(format!("{path}.target"), "missing required field")),
                (Some(t), _) if t.iter().any(|c| !c.is_finite()) => {
                    return Err(SchemaError::new(format!("{path}.target"), "coordinates must be finite"))
                }
                _ => {}
            }
            match self.radius {
                None => return Err(SchemaError::new(format!("{path}.radius"), "missing required field")),
                Some(r) if !(r > 0.0) || !r.is_finite() => {
                    return Err(SchemaError::new(format!("{path}.radius"), "must be > 0"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn from_value(v: &Value, path: &str) -> Result<CheckSpec, SchemaError> {
        let obj = v.as_object().ok_or_else(|| SchemaError::new(path, "expected an object"))?;
        let kind_s: String = field(obj, "type", path)?;
        let kind = CheckKind::parse(&kind_s)
            .ok_or_else(|| SchemaError::new(format!("{path}.type"), format!("unknown check type '{kind_s}'")))?;
        let check = CheckSpec {
            kind,
            item: opt_field(obj, "item", path)?,
            n: opt_field(obj, "n", path)?,
            target: opt_field(obj, "target", path)?,
            radius: opt_field(obj, "radius", path)?,
            anchor: opt_field(obj, "anchor", path)?,
        };
        check.validate(path)?;
        Ok(check)
    }

    /// Compact single-line form, e.g. `inv_ge oak_log 1`.
    pub fn to_compact(&self) -> String {
        let mut parts = vec![self.kind.as_str().to_string()];
        if let Some(i) = &self.item {
            parts.push(i.clone());
        }
        if let Some(n) = self.n {
            parts.push(n.to_string());
        }
        if let Some(t) = self.target {
            parts.push(format!("{},{},{}", t[0], t[1], t[2]));
        }
        if let Some(a) = &self.anchor {
            parts.push(format!("@{a}"));
        }
        if let Some(r) = self.radius {
            parts.push(format!("r={r}"));
        }
        parts.join(" ")
    }

    /// Inverse of [`CheckSpec::to_compact`].
    pub fn parse_compact(s: &str) -> Result<CheckSpec, SchemaError> {
        let mut tokens = s.split_whitespace();
        let kind_s = tokens.next().ok_or_else(|| SchemaError::new("check", "empty check"))?;
        let kind = CheckKind::parse(kind_s)
            .ok_or_else(|| SchemaError::new("check.type", format!("unknown check type '{kind_s}'")))?;
        let mut c = CheckSpec::bare(kind);
        for tok in tokens {
            if let Some(r) = tok.strip_prefix("r=") {
                c.radius = Some(r.parse().map_err(|_| SchemaError::new("check.radius", "not a number"))?);
            } else if let Some(a) = tok.strip_prefix('@') {
                c.anchor = Some(a.to_string());
            } else if tok.contains(',') {
                let xs: Vec<f64> = tok
                    .split(',')
                    .map(|x| x.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| SchemaError::new("check.target", "not a coordinate triple"))?;
                if xs.len() != 3 {
                    return Err(SchemaError::new("check.target", "not a coordinate triple"));
                }
                c.target = Some([xs[0], xs[1], xs[2]]);
            } else if let Ok(n) = tok.parse::<i64>() {
                c.n = Some(n);
            } else {
                c.item = Some(tok.to_string());
            }
        }
        c.validate("check")?;
        Ok(c)
    }
}
