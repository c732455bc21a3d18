#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = subflow::config::parse_config(text) {
        // Validation must not panic on anything that parses.
        let _ = cfg.violations();
    }
});
