#![no_main]

use bragg::config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = config::parse_config(text) {
        // resolution may reject the values but must not panic
        if let Ok(p) = config::resolve(Some(&file), &Default::default()) {
            assert!(p.validate().is_ok());
        }
    }
});
