//! The dataset parser must never panic, and anything it accepts must
//! survive a serialize/reparse cycle unchanged.

#![no_main]

use decal_core::data::io::{dataset_to_csv, parse_logit_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ds) = parse_logit_csv(text) {
            let again = parse_logit_csv(&dataset_to_csv(&ds)).expect("reparse of emitted CSV");
            assert_eq!(ds, again, "CSV roundtrip changed the dataset");
        }
    }
});
