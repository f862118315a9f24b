#![no_main]

use libfuzzer_sys::fuzz_target;
use ronmf::io::matrix::{parse_csv, write_csv};

fuzz_target!(|bytes: &[u8]| {
    let Ok(text) = std::str::from_utf8(bytes) else { return };
    if let Ok(data) = parse_csv(text) {
        assert_eq!(parse_csv(&write_csv(&data)).expect("written csv parses"), data);
    }
});
