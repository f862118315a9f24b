#![no_main]

use libfuzzer_sys::fuzz_target;
use ronmf::io::results::from_json;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(text) = std::str::from_utf8(bytes) {
        let _ = from_json(text);
    }
});
