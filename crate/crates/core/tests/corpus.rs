//! Replays the checked-in fuzz corpus through the plain test harness, so the
//! seed files stay in sync with the parsers even when nobody runs the fuzzer.
//! Each file gets the same treatment its fuzz target would give it: parse,
//! and if accepted, serialize and reparse to the identical value.

use std::fs;
use std::path::PathBuf;

use decal_core::data::io::{dataset_to_csv, parse_logit_csv, parse_manifest};
use decal_core::model::Model;

fn corpus_dir(target: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target)
}

fn corpus_files(target: &str) -> Vec<(String, String)> {
    let dir = corpus_dir(target);
    let mut out = Vec::new();
    for entry in fs::read_dir(&dir).unwrap_or_else(|e| panic!("read {}: {e}", dir.display())) {
        let path = entry.unwrap().path();
        if path.is_file() {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let text = fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
            out.push((name, text));
        }
    }
    out.sort();
    assert!(!out.is_empty(), "no corpus seeds in {}", dir.display());
    out
}

#[test]
fn csv_seeds_roundtrip() {
    let mut accepted = 0;
    for (name, text) in corpus_files("csv_dataset") {
        if let Ok(ds) = parse_logit_csv(&text) {
            let again = parse_logit_csv(&dataset_to_csv(&ds))
                .unwrap_or_else(|e| panic!("{name}: reparse failed: {e}"));
            assert_eq!(ds, again, "{name}: CSV roundtrip changed the dataset");
            accepted += 1;
        }
    }
    // The corpus deliberately mixes valid datasets with malformed rejects.
    assert!(accepted >= 2, "expected at least two parseable CSV seeds");
}

#[test]
fn csv_seeds_reject_malformed() {
    let dir = corpus_dir("csv_dataset");
    for name in ["short_row.csv", "non_finite.csv"] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        assert!(parse_logit_csv(&text).is_err(), "{name} should be rejected");
    }
}

#[test]
fn manifest_seeds_roundtrip() {
    let mut accepted = 0;
    for (name, text) in corpus_files("json_manifest") {
        if let Ok(m) = parse_manifest(&text) {
            let json = serde_json::to_string(&m).unwrap();
            let again = parse_manifest(&json)
                .unwrap_or_else(|e| panic!("{name}: reparse failed: {e}"));
            assert_eq!(m, again, "{name}: manifest roundtrip changed the contents");
            accepted += 1;
        }
    }
    assert!(accepted >= 2, "expected at least two parseable manifest seeds");
}

#[test]
fn model_seeds_roundtrip() {
    let mut accepted = 0;
    for (name, text) in corpus_files("model_json") {
        if let Ok(m) = Model::from_json(&text) {
            let json = m.to_json().unwrap();
            let again = Model::from_json(&json)
                .unwrap_or_else(|e| panic!("{name}: reparse failed: {e}"));
            assert_eq!(m, again, "{name}: model JSON roundtrip changed the contents");
            accepted += 1;
        }
    }
    // One seed per model kind: temperature, point, ensemble, bnn, hmc.
    assert!(accepted >= 5, "expected all five model kinds to parse");
}

#[test]
fn model_seeds_reject_future_format() {
    let text = fs::read_to_string(corpus_dir("model_json").join("future_version.json")).unwrap();
    assert!(
        Model::from_json(&text).is_err(),
        "a model with an unknown format_version should be rejected"
    );
}
