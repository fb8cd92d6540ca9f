#![no_main]

use libfuzzer_sys::fuzz_target;
use voxmem::model::parse_plan;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(plan) = parse_plan(text) {
        let again = serde_json::to_string(&plan.to_value()).unwrap();
        assert_eq!(parse_plan(&again).unwrap(), plan);
    }
});
