#![no_main]

use libfuzzer_sys::fuzz_target;
use ronmf::io::matrix::{decode_rawf64, encode_rawf64};

fuzz_target!(|bytes: &[u8]| {
    if let Ok(data) = decode_rawf64(bytes) {
        let again = encode_rawf64(&data).expect("decoded matrix re-encodes");
        assert_eq!(decode_rawf64(&again).expect("re-encoded bytes decode"), data);
    }
});
