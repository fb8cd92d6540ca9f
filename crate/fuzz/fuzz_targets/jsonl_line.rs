#![no_main]

use libfuzzer_sys::fuzz_target;
use voxmem::canon::from_line;
use voxmem::controller::Event;
use voxmem::model::ExperienceTuple;
use voxmem::store::SummaryRecord;

// First byte picks the record type, the rest is one line.
fuzz_target!(|data: &[u8]| {
    let Some((sel, rest)) = data.split_first() else {
        return;
    };
    let Ok(line) = std::str::from_utf8(rest) else {
        return;
    };
    match sel % 3 {
        0 => {
            if let Ok(t) = from_line::<ExperienceTuple>(line) {
                let _ = t.validate();
            }
        }
        1 => _ = from_line::<SummaryRecord>(line),
        _ => _ = from_line::<Event>(line),
    }
});
