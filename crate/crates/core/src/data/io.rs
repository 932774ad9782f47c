//! Strict parsers for the two on-disk input formats.
//!
//! Both parsers treat their input as untrusted: every failure mode maps to
//! a typed error naming the offending row and column, and nothing is
//! silently coerced. The CSV layout is
//!
//! ```text
//! logit_0,logit_1,...,logit_{C-1},label
//! -1.2,0.4,...,3
//! ```
//!
//! and the manifest is a small JSON file describing where the CSV lives
//! and how to split it:
//!
//! ```json
//! { "csv": "logits.csv", "class_count": 10,
//!   "splits": { "train": 0.7, "val": 0.15, "test": 0.15 } }
//! ```

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{LogitDataset, SplitFractions};
use crate::error::{Error, Result};

/// Dataset descriptor: CSV location (relative paths resolve against the
/// manifest's own directory), class count and split fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub csv: String,
    pub class_count: usize,
    pub splits: SplitFractions,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.csv.is_empty() {
            return Err(Error::InvalidConfig("manifest csv path is empty".into()));
        }
        if self.class_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "manifest class_count must be >= 2, got {}",
                self.class_count
            )));
        }
        self.splits.validate()
    }

    /// CSV path resolved against the directory the manifest was read from.
    pub fn csv_path(&self, manifest_path: &Path) -> PathBuf {
        let p = Path::new(&self.csv);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            manifest_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(p)
        }
    }
}

/// Parse and validate a manifest from JSON text.
pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let m: Manifest = serde_json::from_str(text)?;
    m.validate()?;
    Ok(m)
}

fn expected_header(class_count: usize) -> String {
    let mut h: Vec<String> = (0..class_count).map(|c| format!("logit_{c}")).collect();
    h.push("label".into());
    h.join(",")
}

/// Infer the class count from a header line, or explain why it is invalid.
fn parse_header(line: &str) -> Result<usize> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() < 3 || fields[fields.len() - 1] != "label" {
        return Err(Error::MalformedHeader(format!(
            "expected `logit_0,...,logit_{{C-1}},label`, got `{line}`"
        )));
    }
    let c = fields.len() - 1;
    for (i, f) in fields[..c].iter().enumerate() {
        let want = format!("logit_{i}");
        if *f != want {
            return Err(Error::MalformedHeader(format!(
                "column {i} is `{f}`, expected `{want}`"
            )));
        }
    }
    Ok(c)
}

/// Parse a logit CSV, inferring the class count from the header.
///
/// Strict on purpose: exact header, every row fully populated with finite
/// numbers, labels integral and in range. Tolerates CRLF line endings and
/// one trailing newline, nothing else.
pub fn parse_logit_csv(text: &str) -> Result<LogitDataset> {
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let header = lines.next().filter(|l| !l.is_empty()).ok_or(Error::EmptyDataset)?;
    let class_count = parse_header(header)?;

    let mut flat: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut row = 0usize;
    let mut pending_blank = false;
    for line in lines {
        if line.is_empty() {
            // allow a single trailing newline; reject blank lines elsewhere
            if pending_blank {
                return Err(Error::MalformedRow {
                    row: row + 1,
                    expected: class_count + 1,
                    found: 0,
                });
            }
            pending_blank = true;
            continue;
        }
        if pending_blank {
            return Err(Error::MalformedRow {
                row: row + 1,
                expected: class_count + 1,
                found: 0,
            });
        }
        row += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != class_count + 1 {
            return Err(Error::MalformedRow {
                row,
                expected: class_count + 1,
                found: fields.len(),
            });
        }
        for (c, f) in fields[..class_count].iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| Error::NonFinite {
                row,
                column: format!("logit_{c}"),
                value: (*f).to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: format!("logit_{c}"),
                    value: (*f).to_string(),
                });
            }
            flat.push(v);
        }
        let raw = fields[class_count];
        let label: i64 = raw.parse().map_err(|_| Error::NonFinite {
            row,
            column: "label".into(),
            value: raw.to_string(),
        })?;
        if label < 0 || label as usize >= class_count {
            return Err(Error::LabelOutOfRange {
                row,
                label,
                class_count,
            });
        }
        labels.push(label as usize);
    }
    if row == 0 {
        return Err(Error::EmptyDataset);
    }
    let logits = Array2::from_shape_vec((row, class_count), flat)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    LogitDataset::new(logits, labels)
}

/// Like [`parse_logit_csv`] but additionally checks the class count against
/// an external expectation (typically the manifest).
pub fn parse_logit_csv_expecting(text: &str, class_count: usize) -> Result<LogitDataset> {
    let ds = parse_logit_csv(text)?;
    if ds.class_count() != class_count {
        return Err(Error::ClassCountMismatch {
            expected: class_count,
            found: ds.class_count(),
        });
    }
    Ok(ds)
}

/// Serialize a dataset back to the CSV layout. Uses shortest-roundtrip
/// float formatting, so parse(serialize(ds)) is bit-exact.
pub fn dataset_to_csv(ds: &LogitDataset) -> String {
    let c = ds.class_count();
    let mut out = expected_header(c);
    out.push('\n');
    for (r, &label) in ds.labels.iter().enumerate() {
        for j in 0..c {
            out.push_str(&format!("{},", ds.logits[(r, j)]));
        }
        out.push_str(&format!("{label}\n"));
    }
    out
}

/// Read and parse a manifest file.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    parse_manifest(&text)
}

/// Read and parse a logit CSV file.
pub fn load_logit_csv(path: &Path) -> Result<LogitDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_logit_csv(&text)
}

/// Read a manifest, then the dataset it points to, enforcing class count.
pub fn load_from_manifest(path: &Path) -> Result<(Manifest, LogitDataset)> {
    let manifest = load_manifest(path)?;
    let text = std::fs::read_to_string(manifest.csv_path(path))?;
    let ds = parse_logit_csv_expecting(&text, manifest.class_count)?;
    Ok((manifest, ds))
}
