#![no_main]

use libfuzzer_sys::fuzz_target;
use szego::fieldio::{decode_csv, encode_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(form) = decode_csv(text) {
        let once = encode_csv(&form);
        assert_eq!(encode_csv(&decode_csv(&once).unwrap()), once);
    }
});
