#![no_main]

use libfuzzer_sys::fuzz_target;
use szego::kernel_table::parse_samples;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_samples(text);
    }
});
