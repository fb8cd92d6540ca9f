#![no_main]

use libfuzzer_sys::fuzz_target;
use voxmem::distill::yaml::{failures_from_yaml, skills_from_yaml};
use voxmem::harness::tasks::parse_suite;
use voxmem::harness::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Some((sel, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    match sel % 4 {
        0 => _ = skills_from_yaml(text),
        1 => _ = failures_from_yaml(text),
        2 => _ = parse_suite(text),
        _ => _ = RunConfig::from_text(text),
    }
});
