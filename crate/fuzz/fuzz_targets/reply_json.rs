#![no_main]

use libfuzzer_sys::fuzz_target;
use voxmem::planner::{extract_json_object, plan_from_reply};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Some(obj) = extract_json_object(&text) {
        assert!(obj.starts_with('{') && obj.ends_with('}'));
        assert!(serde_json::from_str::<serde_json::Value>(obj).is_ok());
    }
    let _ = plan_from_reply(&text);
});
