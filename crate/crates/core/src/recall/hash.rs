use super::encode::{fnv1a, is_stop_token, tokenize};
use crate::model::TaskKind;

/// Side length of a spatial cell in blocks.
pub const CELL_SIZE: f64 = 16.0;

/// Sorted content tokens of a condition.
pub fn normalize_condition(text: &str) -> Vec<String> {
    let mut toks: Vec<String> = tokenize(text).into_iter().filter(|t| !is_stop_token(t)).collect();
    toks.sort();
    toks
}

pub fn condition_hash(task_kind: TaskKind, condition: &str) -> u64 {
    let key = format!("{}|{}", task_kind.as_str(), normalize_condition(condition).join(" "));
    fnv1a(key.as_bytes())
}

pub fn cell_of(coords: [f64; 3], cell_size: f64) -> Option<[i64; 3]> {
    if coords.iter().any(|c| !c.is_finite()) || !(cell_size > 0.0) {
        return None;
    }
    Some(coords.map(|c| (c / cell_size).floor() as i64))
}

pub fn spatial_hash_sized(coords: [f64; 3], cell_size: f64) -> Option<u64> {
    let cell = cell_of(coords, cell_size)?;
    let mut bytes = Vec::with_capacity(24);
    for c in cell {
        bytes.extend_from_slice(&c.to_le_bytes());
    }
    Some(fnv1a(&bytes))
}

/// Cell id of `coords`; `None` for non-finite input.
pub fn spatial_hash(coords: [f64; 3]) -> Option<u64> {
    spatial_hash_sized(coords, CELL_SIZE)
}

/// Coarse zone tag from the horizontal cell quadrant.
pub fn zone_label(coords: [f64; 3]) -> String {
    match cell_of(coords, CELL_SIZE) {
        Some([cx, _, cz]) => {
            let ew = if cx.rem_euclid(2) == 0 { "w" } else { "e" };
            let ns = if cz.rem_euclid(2) == 0 { "n" } else { "s" };
            format!("zone_{ns}{ew}")
        }
        None => "zone_unknown".into(),
    }
}
