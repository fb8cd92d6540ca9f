use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::check::CheckSpec;
use super::SchemaError;

/// Longest allowed subgoal condition, in whitespace-separated tokens.
pub const MAX_CONDITION_TOKENS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Mine,
    Craft,
    Use,
    Combat,
    Wait,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [TaskKind::Mine, TaskKind::Craft, TaskKind::Use, TaskKind::Combat, TaskKind::Wait];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Mine => "mine",
            TaskKind::Craft => "craft",
            TaskKind::Use => "use",
            TaskKind::Combat => "combat",
            TaskKind::Wait => "wait",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        TaskKind::ALL.iter().copied().find(|k| k.as_str() == s)
    }

    /// Best guess from the leading verb of a free-text step.
    pub fn infer(condition: &str) -> TaskKind {
        let verb = condition.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
        match verb.as_str() {
            "mine" | "gather" | "collect" | "chop" | "dig" => TaskKind::Mine,
            "craft" | "smelt" | "make" | "build" => TaskKind::Craft,
            "fight" | "attack" | "kill" => TaskKind::Combat,
            "wait" | "move" | "go" | "walk" => TaskKind::Wait,
            _ => TaskKind::Use,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutorHint {
    Default,
    CraftStation,
    Wait,
}

impl ExecutorHint {
    pub fn as_str(self) -> &'static str {
        match self {
            ExecutorHint::Default => "default",
            ExecutorHint::CraftStation => "craft_station",
            ExecutorHint::Wait => "wait",
        }
    }

    /// Accepts the canonical names plus the primitive/crafting executor
    /// names used by external planner prompts (`stevei`, `mcu_craft`).
    pub fn parse(s: &str) -> Option<ExecutorHint> {
        match s {
            "default" | "stevei" => Some(ExecutorHint::Default),
            "craft_station" | "mcu_craft" => Some(ExecutorHint::CraftStation),
            "wait" => Some(ExecutorHint::Wait),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Move,
    Stay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgoalSpec {
    pub subgoal_id: String,
    pub condition: String,
    pub timeout_s: u32,
    pub task_kind: TaskKind,
    pub executor_hint: ExecutorHint,
    pub mode: Mode,
    pub checks: Vec<CheckSpec>,
}

impl SubgoalSpec {
    /// First item named by an `inv_ge`-style check: the subgoal's target item.
    pub fn target_item(&self) -> Option<&str> {
        use super::check::CheckKind::*;
        self.checks
            .iter()
            .find(|c| matches!(c.kind, InvGe | InvDeltaGe | CraftedContains))
            .and_then(|c| c.item.as_deref())
    }

    pub fn validate(&self, path: &str) -> Result<(), SchemaError> {
        if self.subgoal_id.trim().is_empty() {
            return Err(SchemaError::new(format!("{path}.subgoal_id"), "must be nonempty"));
        }
        let tokens = self.condition.split_whitespace().count();
        if tokens == 0 {
            return Err(SchemaError::new(format!("{path}.condition"), "must be nonempty"));
        }
        if tokens > MAX_CONDITION_TOKENS {
            return Err(SchemaError::new(
                format!("{path}.condition"),
                format!("has {tokens} tokens, limit is {MAX_CONDITION_TOKENS}"),
            ));
        }
        if self.timeout_s == 0 {
            return Err(SchemaError::new(format!("{path}.timeout_s"), "must be > 0"));
        }
        for (i, c) in self.checks.iter().enumerate() {
            c.validate(&format!("{path}.checks[{i}]"))?;
        }
        Ok(())
    }

    pub fn from_value(v: &Value, path: &str) -> Result<SubgoalSpec, SchemaError> {
        let obj = v.as_object().ok_or_else(|| SchemaError::new(path, "expected an object"))?;
        let kind_s: String = field(obj, "task_kind", path)?;
        let task_kind = TaskKind::parse(&kind_s)
            .ok_or_else(|| SchemaError::new(format!("{path}.task_kind"), format!("unknown task_kind '{kind_s}'")))?;
        let hint_s: String = field(obj, "executor_hint", path)?;
        let executor_hint = ExecutorHint::parse(&hint_s).ok_or_else(|| {
            SchemaError::new(format!("{path}.executor_hint"), format!("unknown executor_hint '{hint_s}'"))
        })?;
        let mode_s: String = field(obj, "mode", path)?;
        let mode = match mode_s.as_str() {
            "move" => Mode::Move,
            "stay" => Mode::Stay,
            other => return Err(SchemaError::new(format!("{path}.mode"), format!("unknown mode '{other}'"))),
        };
        let timeout: i64 = field(obj, "timeout_s", path)?;
        if timeout <= 0 || timeout > u32::MAX as i64 {
            return Err(SchemaError::new(format!("{path}.timeout_s"), "must be > 0"));
        }
        let checks_v =
            obj.get("checks").ok_or_else(|| SchemaError::new(format!("{path}.checks"), "missing required field"))?;
        let checks_arr =
            checks_v.as_array().ok_or_else(|| SchemaError::new(format!("{path}.checks"), "expected an array"))?;
        let checks = checks_arr
            .iter()
            .enumerate()
            .map(|(i, c)| CheckSpec::from_value(c, &format!("{path}.checks[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let sg = SubgoalSpec {
            subgoal_id: field(obj, "subgoal_id", path)?,
            condition: field(obj, "condition", path)?,
            timeout_s: timeout as u32,
            task_kind,
            executor_hint,
            mode,
            checks,
        };
        sg.validate(path)?;
        Ok(sg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSpec {
    pub plan_id: String,
    pub subgoals: Vec<SubgoalSpec>,
    #[serde(default)]
    pub global_constraints: Vec<String>,
}

impl PlanSpec {
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.plan_id.trim().is_empty() {
            return Err(SchemaError::new("plan_id", "must be nonempty"));
        }
        if self.subgoals.is_empty() {
            return Err(SchemaError::new("subgoals", "must contain at least one subgoal"));
        }
        let mut seen = BTreeSet::new();
        for (i, sg) in self.subgoals.iter().enumerate() {
            let path = format!("subgoals[{i}]");
            sg.validate(&path)?;
            if !seen.insert(sg.subgoal_id.as_str()) {
                return Err(SchemaError::new(
                    format!("{path}.subgoal_id"),
                    format!("duplicate subgoal_id '{}'", sg.subgoal_id),
                ));
            }
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("plan serializes")
    }
}

/// Validate a raw plan document (already parsed into a JSON tree).
pub fn validate_plan(raw: &Value) -> Result<PlanSpec, SchemaError> {
    let obj = raw.as_object().ok_or_else(|| SchemaError::new("$", "expected a JSON object"))?;
    let plan_id: String = field(obj, "plan_id", "")?;
    let subgoals_v = obj.get("subgoals").ok_or_else(|| SchemaError::new("subgoals", "missing required field"))?;
    let arr = subgoals_v.as_array().ok_or_else(|| SchemaError::new("subgoals", "expected an array"))?;
    let subgoals = arr
        .iter()
        .enumerate()
        .map(|(i, v)| SubgoalSpec::from_value(v, &format!("subgoals[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let global_constraints: Vec<String> = opt_field(obj, "global_constraints", "")?.unwrap_or_default();
    let plan = PlanSpec { plan_id, subgoals, global_constraints };
    plan.validate()?;
    Ok(plan)
}

/// Parse and validate plan JSON text.
pub fn parse_plan(text: &str) -> Result<PlanSpec, SchemaError> {
    let v: Value = serde_json::from_str(text).map_err(|e| SchemaError::new("$", format!("invalid JSON: {e}")))?;
    validate_plan(&v)
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

pub(crate) fn field<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str, path: &str) -> Result<T, SchemaError> {
    match obj.get(key) {
        None | Some(Value::Null) => Err(SchemaError::new(join(path, key), "missing required field")),
        Some(v) => {
            serde_json::from_value(v.clone()).map_err(|e| SchemaError::new(join(path, key), format!("wrong type: {e}")))
        }
    }
}

pub(crate) fn opt_field<T: DeserializeOwned>(
    obj: &Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<Option<T>, SchemaError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| SchemaError::new(join(path, key), format!("wrong type: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check::CheckKind;
    use proptest::prelude::*;
    use serde_json::json;

    pub(crate) fn card_plan() -> Value {
        json!({
            "plan_id": "p_0001",
            "subgoals": [{
                "subgoal_id": "sg_001",
                "condition": "mine oak logs",
                "timeout_s": 60,
                "task_kind": "mine",
                "executor_hint": "stevei",
                "mode": "move",
                "checks": [{"type":"inv_ge","item":"oak_log","n":1}]
            }],
            "global_constraints": []
        })
    }

    #[test]
    fn card_example_validates() {
        let p = validate_plan(&card_plan()).unwrap();
        assert_eq!(p.subgoals.len(), 1);
        assert_eq!(p.subgoals[0].executor_hint, ExecutorHint::Default);
        assert_eq!(p.subgoals[0].checks, vec![CheckSpec::inv_ge("oak_log", 1)]);
    }

    #[test]
    fn zero_subgoals_rejected() {
        let mut v = card_plan();
        v["subgoals"] = json!([]);
        assert_eq!(validate_plan(&v).unwrap_err().path, "subgoals");
    }

    #[test]
    fn zero_timeout_rejected() {
        let mut v = card_plan();
        v["subgoals"][0]["timeout_s"] = json!(0);
        assert_eq!(validate_plan(&v).unwrap_err().path, "subgoals[0].timeout_s");
    }

    #[test]
    fn long_condition_rejected_not_truncated() {
        let mut v = card_plan();
        v["subgoals"][0]["condition"] = json!("go and mine a lot of oak logs");
        assert_eq!(validate_plan(&v).unwrap_err().path, "subgoals[0].condition");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut v = card_plan();
        let sg = v["subgoals"][0].clone();
        v["subgoals"].as_array_mut().unwrap().push(sg);
        let e = validate_plan(&v).unwrap_err();
        assert_eq!(e.path, "subgoals[1].subgoal_id");
    }

    fn arb_check() -> impl Strategy<Value = CheckSpec> {
        let item = prop::sample::select(crate::sim::items::ITEMS.to_vec());
        prop_oneof![
            (item.clone(), 1i64..64).prop_map(|(i, n)| CheckSpec::inv_ge(i, n)),
            item.clone().prop_map(|i| CheckSpec::with_item(CheckKind::CraftedContains, i)),
            (-100i32..100, 1u8..8).prop_map(|(x, r)| CheckSpec::coord_near([x as f64, 4.0, 0.5], r as f64)),
            Just(CheckSpec::bare(CheckKind::GuiIsClosed)),
            (0i64..1000).prop_map(|n| CheckSpec::with_n(CheckKind::WorldTimeGe, n)),
        ]
    }

    fn arb_plan() -> impl Strategy<Value = PlanSpec> {
        let sg = (
            prop::sample::select(vec!["mine oak logs", "craft planks", "smelt iron", "wait"]),
            1u32..600,
            prop::sample::select(TaskKind::ALL.to_vec()),
            prop::sample::select(vec![ExecutorHint::Default, ExecutorHint::CraftStation, ExecutorHint::Wait]),
            prop::bool::ANY,
            prop::collection::vec(arb_check(), 0..4),
        );
        prop::collection::vec(sg, 1..6).prop_map(|sgs| PlanSpec {
            plan_id: "p_x".into(),
            subgoals: sgs
                .into_iter()
                .enumerate()
                .map(|(i, (c, t, k, h, m, checks))| SubgoalSpec {
                    subgoal_id: format!("sg_{i:03}"),
                    condition: c.to_string(),
                    timeout_s: t,
                    task_kind: k,
                    executor_hint: h,
                    mode: if m { Mode::Move } else { Mode::Stay },
                    checks,
                })
                .collect(),
            global_constraints: vec!["avoid_hazard".into()],
        })
    }

    proptest! {
        #[test]
        fn validate_serialize_is_idempotent(plan in arb_plan()) {
            let once = validate_plan(&plan.to_value()).unwrap();
            let twice = validate_plan(&once.to_value()).unwrap();
            prop_assert_eq!(&once, &plan);
            prop_assert_eq!(once, twice);
        }
    }
}
