#![no_main]

use libfuzzer_sys::fuzz_target;
use szego::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = RunConfig::from_toml_str(text);
    }
});
