//! Canonical line-oriented JSON encoding.
//!
//! Every persisted record goes through [`to_line`]: the value is lowered into a
//! `serde_json::Value` (whose maps are ordered by key) and printed compactly, so
//! identical inputs give identical bytes.

use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn to_value<T: Serialize>(value: &T) -> serde_json::Result<serde_json::Value> {
    serde_json::to_value(value)
}

/// One compact JSON line with alphabetically ordered keys (no trailing newline).
pub fn to_line<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string(&v)
}

/// Pretty, key-ordered JSON for reports and metadata files.
pub fn to_pretty<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn from_line<T: DeserializeOwned>(line: &str) -> serde_json::Result<T> {
    serde_json::from_str(line)
}
