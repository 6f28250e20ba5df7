#![no_main]

use libfuzzer_sys::fuzz_target;
use szego::fieldio::{decode_binary, encode_binary};

fuzz_target!(|data: &[u8]| {
    // anything that decodes must survive a re-encode bit for bit (NaNs included)
    if let Ok(form) = decode_binary(data) {
        let once = encode_binary(&form);
        let twice = encode_binary(&decode_binary(&once).unwrap());
        assert_eq!(once, twice);
    }
});
