#![no_main]

use libfuzzer_sys::fuzz_target;
use ronmf::io::matrix::parse_labels;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(text) = std::str::from_utf8(bytes) {
        let _ = parse_labels(text);
    }
});
