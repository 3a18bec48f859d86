#![no_main]

use bragg::config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let items: Vec<&str> = text.split('\n').collect();
    for item in &items {
        if let Ok((key, _)) = config::parse_override(item) {
            assert!(config::KEYS.contains(&key.as_str()));
        }
    }
    if let Ok(layer) = config::parse_overrides(&items) {
        let _ = config::resolve(None, &layer);
    }
});
