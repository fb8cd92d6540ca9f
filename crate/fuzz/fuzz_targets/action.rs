#![no_main]

use libfuzzer_sys::fuzz_target;
use voxmem::sim::Action;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(a) = Action::parse(s) {
        assert_eq!(Action::parse(&a.to_string()).unwrap(), a);
    }
});
