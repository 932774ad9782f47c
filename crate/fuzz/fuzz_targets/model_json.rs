//! The model decoder must never panic, and any model it accepts must
//! survive an encode/decode cycle unchanged.

#![no_main]

use decal_core::model::Model;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = Model::from_json(text) {
            let json = m.to_json().expect("model serializes");
            let again = Model::from_json(&json).expect("reparse of emitted model");
            assert_eq!(m, again, "model JSON roundtrip changed the contents");
        }
    }
});
