#![no_main]

use libfuzzer_sys::fuzz_target;
use ronmf::ExperimentConfig;

fuzz_target!(|bytes: &[u8]| {
    let Ok(text) = std::str::from_utf8(bytes) else { return };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let toml = cfg.to_toml().expect("parsed config serializes");
        let again = ExperimentConfig::parse(&toml).expect("serialized config parses");
        // Compared as text: NaN fields are legal until a fit validates them.
        assert_eq!(again.to_toml().expect("reparsed config serializes"), toml);
    }
});
