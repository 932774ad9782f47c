//! The manifest parser must never panic, and any manifest it accepts must
//! survive a serialize/reparse cycle unchanged.

#![no_main]

use decal_core::data::io::parse_manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = parse_manifest(text) {
            let json = serde_json::to_string(&m).expect("manifest serializes");
            let again = parse_manifest(&json).expect("reparse of emitted manifest");
            assert_eq!(m, again, "manifest roundtrip changed the contents");
        }
    }
});
