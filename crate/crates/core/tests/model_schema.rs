mod common;

use proptest::prelude::*;
use serde_json::json;

use voxmem::model::{
    compute_state_diff, parse_plan, validate_plan, CheckKind, CheckSpec, DiagnosisRecord, ExecutorHint, FailureReason,
    Mode, PlanSpec, StateSnapshot, SubgoalSpec, TaskKind, MAX_CONDITION_TOKENS,
};

#[test]
fn card_example_parses_into_expected_fields() {
    let plan = validate_plan(&common::card_plan()).unwrap();
    assert_eq!(plan.plan_id, "p_xxxx");
    let sg = &plan.subgoals[0];
    assert_eq!(sg.executor_hint, ExecutorHint::Default);
    assert_eq!(sg.task_kind, TaskKind::Mine);
    assert_eq!(sg.mode, Mode::Move);
    assert_eq!(sg.checks, vec![CheckSpec::inv_ge("oak_log", 1)]);
    assert_eq!(sg.target_item(), Some("oak_log"));
}

#[test]
fn malformed_corpus_names_fields() {
    for (name, doc, path) in common::malformed_plans() {
        let e = validate_plan(&doc).expect_err(name);
        assert_eq!(e.path, path, "{name}");
        assert!(e.to_string().starts_with(&format!("{path}: ")), "{name}: {e}");
    }
}

#[test]
fn parse_plan_reports_bad_json_at_root() {
    assert_eq!(parse_plan("{not json").unwrap_err().path, "$");
    assert_eq!(parse_plan("[1,2]").unwrap_err().path, "$");
}

#[test]
fn craft_hint_alias_is_accepted() {
    let mut v = common::card_plan();
    v["subgoals"][0]["executor_hint"] = json!("mcu_craft");
    let plan = validate_plan(&v).unwrap();
    assert_eq!(plan.subgoals[0].executor_hint, ExecutorHint::CraftStation);
}

#[test]
fn check_kinds_enforce_their_fields() {
    let bad = [
        (json!({"type": "coord_near", "radius": 2.0}), "c.target"),
        (json!({"type": "coord_near", "target": [1, 2, 3]}), "c.radius"),
        (json!({"type": "coord_near", "target": [1, 2, 3], "radius": 0}), "c.radius"),
        (json!({"type": "inv_ge", "item": "unobtainium", "n": 1}), "c.item"),
        (json!({"type": "inv_ge", "item": "plank", "n": 0}), "c.n"),
        (json!({"type": "furnace_cook_ge"}), "c.n"),
        (json!({"type": "equipped_is"}), "c.item"),
        (json!("inv_ge"), "c"),
    ];
    for (v, path) in bad {
        assert_eq!(CheckSpec::from_value(&v, "c").unwrap_err().path, path, "{v}");
    }
    let ok = CheckSpec::from_value(&json!({"type": "coord_near", "anchor": "nearest:furnace", "radius": 2}), "c");
    assert!(ok.is_ok());
}

#[test]
fn diagnosis_reason_iff_failure() {
    let s = StateSnapshot::empty("e");
    let d = compute_state_diff(&s, &s).unwrap();
    assert!(DiagnosisRecord::new(true, d.clone(), None, [0.0; 6]).is_ok());
    assert!(DiagnosisRecord::new(false, d.clone(), Some(FailureReason::Timeout), [0.0; 6]).is_ok());
    assert!(DiagnosisRecord::new(true, d.clone(), Some(FailureReason::Timeout), [0.0; 6]).is_err());
    assert!(DiagnosisRecord::new(false, d.clone(), None, [0.0; 6]).is_err());
    assert!(DiagnosisRecord::new(true, d, None, [f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
}

#[test]
fn diagnosis_json_rejects_inconsistent_records() {
    let s = StateSnapshot::empty("e");
    let d = DiagnosisRecord::new(false, compute_state_diff(&s, &s).unwrap(), Some(FailureReason::NavStuck), [0.0; 6])
        .unwrap();
    let mut v = serde_json::to_value(&d).unwrap();
    assert_eq!(v["failure_reason"], json!("NAV_STUCK"));
    v["outcome"] = json!(true);
    assert!(serde_json::from_value::<DiagnosisRecord>(v).is_err());
}

#[test]
fn state_diff_rejects_cross_episode_pairs() {
    assert!(compute_state_diff(&StateSnapshot::empty("a"), &StateSnapshot::empty("b")).is_err());
}

#[test]
fn reason_names_round_trip() {
    for r in common::ALL_REASONS {
        assert_eq!(FailureReason::parse(r.as_str()), Some(r));
        assert_eq!(serde_json::to_value(r).unwrap(), json!(r.as_str()));
    }
}

fn arb_item() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["oak_log", "plank", "stick", "cobblestone", "iron_ore", "iron_ingot", "furnace"])
        .prop_map(String::from)
}

fn arb_check() -> impl Strategy<Value = CheckSpec> {
    prop_oneof![
        (arb_item(), 1..64i64).prop_map(|(i, n)| CheckSpec::inv_ge(&i, n)),
        (arb_item(), 1..64i64)
            .prop_map(|(i, n)| CheckSpec { n: Some(n), ..CheckSpec::with_item(CheckKind::InvDeltaGe, &i) }),
        arb_item().prop_map(|i| CheckSpec::with_item(CheckKind::CraftedContains, &i)),
        (-40..40i32, 0..8i32, -40..40i32, 1..6u8)
            .prop_map(|(x, y, z, r)| CheckSpec::coord_near([x as f64, y as f64, z as f64], r as f64 * 0.5)),
        (0..100_000i64).prop_map(|n| CheckSpec::with_n(CheckKind::WorldTimeGe, n)),
        Just(CheckSpec::bare(CheckKind::GuiIsOpen)),
        Just(CheckSpec::bare(CheckKind::FurnaceBurnActive)),
    ]
}

fn arb_subgoal() -> impl Strategy<Value = SubgoalSpec> {
    let words = prop::collection::vec(
        prop::sample::select(vec!["mine", "craft", "oak", "log", "plank", "near", "table"]),
        1..=MAX_CONDITION_TOKENS,
    );
    (
        words,
        1..600u32,
        prop::sample::select(TaskKind::ALL.to_vec()),
        prop::sample::select(vec![ExecutorHint::Default, ExecutorHint::CraftStation, ExecutorHint::Wait]),
        prop::bool::ANY,
        prop::collection::vec(arb_check(), 0..4),
    )
        .prop_map(|(w, timeout_s, task_kind, executor_hint, stay, checks)| SubgoalSpec {
            subgoal_id: String::new(),
            condition: w.join(" "),
            timeout_s,
            task_kind,
            executor_hint,
            mode: if stay { Mode::Stay } else { Mode::Move },
            checks,
        })
}

proptest! {
    #[test]
    fn valid_plans_survive_json(mut subgoals in prop::collection::vec(arb_subgoal(), 1..6), id in "[a-z0-9_]{1,12}") {
        for (i, sg) in subgoals.iter_mut().enumerate() {
            sg.subgoal_id = format!("sg_{i:03}");
        }
        let plan = PlanSpec { plan_id: id, subgoals, global_constraints: vec!["avoid lava".into()] };
        let text = serde_json::to_string(&plan.to_value()).unwrap();
        prop_assert_eq!(parse_plan(&text).unwrap(), plan);
    }

    #[test]
    fn compact_checks_round_trip(c in arb_check()) {
        prop_assert_eq!(CheckSpec::parse_compact(&c.to_compact()).unwrap(), c);
    }

    #[test]
    fn state_diff_matches_snapshots(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let mut clock = 0;
        let t = common::random_tuple(&mut r, "e", 1, &mut clock);
        let d = compute_state_diff(&t.s_pre, &t.s_post).unwrap();
        for (k, v) in &d.inventory {
            let pre = t.s_pre.count(k) as i64;
            let post = t.s_post.count(k) as i64;
            prop_assert_eq!(*v, post - pre);
            prop_assert!(*v != 0);
        }
        prop_assert_eq!(d.world_time_delta, t.s_post.world_time as i64 - t.s_pre.world_time as i64);
        prop_assert!(compute_state_diff(&t.s_pre, &t.s_pre).unwrap().is_zero());
        t.validate().unwrap();
    }
}
