//! Calibration and discrimination metrics: ECE, reliability bins, accuracy,
//! negative log-likelihood and the Brier score.
//!
//! Conventions fixed here (the usual definitions leave them open):
//! * bins are left-open/right-closed, `(i/B, (i+1)/B]`, except bin 0 which
//!   also contains 0, so confidence 1.0 lands in the top bin and every
//!   sample lands in exactly one bin;
//! * argmax ties break toward the lowest class index;
//! * probabilities are floored at 1e-12 before taking logs;
//! * Brier is the multiclass sum-over-classes form, range `[0, 2]`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to probabilities before `ln` in [`nll`].
pub const NLL_FLOOR: f64 = 1e-12;

/// Default bin count for ECE and reliability diagrams.
pub const DEFAULT_BINS: usize = 15;

const ROW_SUM_TOL: f64 = 1e-6;
const ENTRY_TOL: f64 = 1e-9;

/// An `N x C` matrix of class probabilities, one distribution per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    probs: Array2<f64>,
}

impl ProbMatrix {
    /// Validates that every row is a probability distribution.
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        for (r, row) in probs.rows().into_iter().enumerate() {
            let mut sum = 0.0;
            for &p in row.iter() {
                if !p.is_finite() || p < -ENTRY_TOL || p > 1.0 + ENTRY_TOL {
                    return Err(Error::NotADistribution { row: r, sum: p });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotADistribution { row: r, sum });
            }
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.nrows() == 0
    }

    pub fn class_count(&self) -> usize {
        self.probs.ncols()
    }

    /// Predicted class per row; ties break toward the lowest index.
    pub fn predictions(&self) -> Vec<usize> {
        self.probs
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                let mut best_p = row[0];
                for (c, &p) in row.iter().enumerate().skip(1) {
                    if p > best_p {
                        best = c;
                        best_p = p;
                    }
                }
                best
            })
            .collect()
    }

    /// Max probability per row.
    pub fn confidences(&self) -> Vec<f64> {
        self.probs
            .rows()
            .into_iter()
            .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }
}

/// One reliability-diagram bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
}

/// Equal-width reliability bins over the confidence range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBins {
    pub bin_count: usize,
    pub total: usize,
    pub bins: Vec<Bin>,
}

impl ReliabilityBins {
    /// CSV with header `bin_lower,bin_upper,count,mean_confidence,accuracy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lower,bin_upper,count,mean_confidence,accuracy\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                b.lower, b.upper, b.count, b.mean_confidence, b.accuracy
            ));
        }
        out
    }
}

/// Bin index of a confidence value: `(i/B, (i+1)/B]` with bin 0 closed at 0.
pub fn bin_index(confidence: f64, bin_count: usize) -> usize {
    let raw = (confidence * bin_count as f64).ceil() as isize - 1;
    raw.clamp(0, bin_count as isize - 1) as usize
}

fn validate_labels(probs: &ProbMatrix, labels: &[usize]) -> Result<()> {
    if labels.len() != probs.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} probability rows but {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let c = probs.class_count();
    for (i, &l) in labels.iter().enumerate() {
        if l >= c {
            return Err(Error::LabelOutOfRange {
                row: i,
                label: l as i64,
                class_count: c,
            });
        }
    }
    Ok(())
}

/// Assign every sample to a confidence bin and aggregate per-bin accuracy
/// and mean confidence.
pub fn reliability_bins(
    probs: &ProbMatrix,
    labels: &[usize],
    bin_count: usize,
) -> Result<ReliabilityBins> {
    if bin_count == 0 {
        return Err(Error::InvalidConfig("bin_count must be >= 1".into()));
    }
    validate_labels(probs, labels)?;
    let conf = probs.confidences();
    let pred = probs.predictions();
    let mut counts = vec![0usize; bin_count];
    let mut conf_sum = vec![0.0f64; bin_count];
    let mut hit_sum = vec![0usize; bin_count];
    for i in 0..labels.len() {
        let b = bin_index(conf[i], bin_count);
        counts[b] += 1;
        conf_sum[b] += conf[i];
        if pred[i] == labels[i] {
            hit_sum[b] += 1;
        }
    }
    let bins = (0..bin_count)
        .map(|b| {
            let lower = b as f64 / bin_count as f64;
            let upper = (b + 1) as f64 / bin_count as f64;
            if counts[b] == 0 {
                Bin {
                    lower,
                    upper,
                    count: 0,
                    mean_confidence: 0.0,
                    accuracy: 0.0,
                }
            } else {
                Bin {
                    lower,
                    upper,
                    count: counts[b],
                    mean_confidence: conf_sum[b] / counts[b] as f64,
                    accuracy: hit_sum[b] as f64 / counts[b] as f64,
                }
            }
        })
        .collect();
    Ok(ReliabilityBins {
        bin_count,
        total: labels.len(),
        bins,
    })
}

/// Expected Calibration Error: `sum_i |B_i|/N * |acc(B_i) - conf(B_i)|`,
/// reported as a fraction in `[0, 1]`.
pub fn ece(probs: &ProbMatrix, labels: &[usize], bin_count: usize) -> Result<f64> {
    let rb = reliability_bins(probs, labels, bin_count)?;
    let n = rb.total as f64;
    Ok(rb
        .bins
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 / n * (b.accuracy - b.mean_confidence).abs())
        .sum())
}

/// Fraction of rows whose argmax (lowest-index tie-break) equals the label.
pub fn accuracy(probs: &ProbMatrix, labels: &[usize]) -> Result<f64> {
    validate_labels(probs, labels)?;
    let pred = probs.predictions();
    let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean negative log-likelihood of the true class, in nats.
pub fn nll(probs: &ProbMatrix, labels: &[usize]) -> Result<f64> {
    validate_labels(probs, labels)?;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &t)| -probs.probs()[(i, t)].max(NLL_FLOOR).ln())
        .sum();
    Ok(total / labels.len() as f64)
}

/// Mean multiclass Brier score: `sum_c (p_c - onehot_c)^2` averaged over rows.
pub fn brier(probs: &ProbMatrix, labels: &[usize]) -> Result<f64> {
    validate_labels(probs, labels)?;
    let c = probs.class_count();
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            (0..c)
                .map(|j| {
                    let target = if j == t { 1.0 } else { 0.0 };
                    let d = probs.probs()[(i, j)] - target;
                    d * d
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total / labels.len() as f64)
}

/// The full metric bundle for one (predictions, labels) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMetrics {
    pub ece: f64,
    pub accuracy: f64,
    pub nll: f64,
    pub brier: f64,
}

impl CalibrationMetrics {
    pub fn compute(probs: &ProbMatrix, labels: &[usize], bin_count: usize) -> Result<Self> {
        Ok(Self {
            ece: ece(probs, labels, bin_count)?,
            accuracy: accuracy(probs, labels)?,
            nll: nll(probs, labels)?,
            brier: brier(probs, labels)?,
        })
    }

    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            ece: self.ece,
            ece_percent: 100.0 * self.ece,
            accuracy: self.accuracy,
            nll: self.nll,
            brier: self.brier,
        }
    }
}

/// JSON export shape; `ece_percent` duplicates `ece` in the percentage
/// convention used by calibration tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ece: f64,
    pub ece_percent: f64,
    pub accuracy: f64,
    pub nll: f64,
    pub brier: f64,
}
