//! Datasets and generators.
//!
//! The calibration pipeline is decoupled from whatever produced the logits:
//! everything downstream consumes a [`LogitDataset`] (an `N x C` matrix of
//! pre-softmax scores plus integer labels). This module also provides the
//! two synthetic sources used throughout the tests and the demo pipeline:
//! a 2-D Gaussian-blob classification task and a miscalibrated-logit
//! generator with a known optimal temperature.

pub mod io;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Logits plus labels; the universal input to calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitDataset {
    pub logits: Array2<f64>,
    pub labels: Vec<usize>,
}

impl LogitDataset {
    /// Validates shape agreement, finiteness and label range.
    pub fn new(logits: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        if logits.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if logits.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} logit rows but {} labels",
                logits.nrows(),
                labels.len()
            )));
        }
        let c = logits.ncols();
        if c < 2 {
            return Err(Error::InvalidConfig(
                "need at least 2 classes".into(),
            ));
        }
        for ((r, col), &v) in logits.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: r,
                    column: format!("logit_{col}"),
                    value: format!("{v}"),
                });
            }
        }
        for (r, &l) in labels.iter().enumerate() {
            if l >= c {
                return Err(Error::LabelOutOfRange {
                    row: r,
                    label: l as i64,
                    class_count: c,
                });
            }
        }
        Ok(Self { logits, labels })
    }

    pub fn len(&self) -> usize {
        self.logits.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.nrows() == 0
    }

    pub fn class_count(&self) -> usize {
        self.logits.ncols()
    }

    /// New dataset containing the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let c = self.class_count();
        let mut logits = Array2::zeros((indices.len(), c));
        let mut labels = Vec::with_capacity(indices.len());
        for (out, &i) in indices.iter().enumerate() {
            if i >= self.len() {
                return Err(Error::ShapeMismatch(format!(
                    "split index {i} out of range for {} rows",
                    self.len()
                )));
            }
            logits.row_mut(out).assign(&self.logits.row(i));
            labels.push(self.labels[i]);
        }
        Ok(Self { logits, labels })
    }
}

/// Fractions of a dataset assigned to each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("train", self.train), ("val", self.val), ("test", self.test)] {
            if !f.is_finite() || !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidConfig(format!(
                    "split fraction {name}={f} outside [0, 1]"
                )));
            }
        }
        let sum = self.train + self.val + self.test;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "split fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.15,
            test: 0.15,
        }
    }
}

/// Row indices per split; together a permutation of `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffle `0..n` and cut it into train/val/test.
///
/// Counts follow largest-remainder rounding so they always sum to `n`
/// exactly; remainder ties go to train, then val, then test.
pub fn split_indices(n: usize, fractions: &SplitFractions, seed_value: u64) -> Result<SplitIndices> {
    fractions.validate()?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let targets = [
        fractions.train * n as f64,
        fractions.val * n as f64,
        fractions.test * n as f64,
    ];
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    // stable sort keeps the train < val < test preference on exact ties
    order.sort_by(|&a, &b| {
        let fa = targets[a] - targets[a].floor();
        let fb = targets[b] - targets[b].floor();
        fb.partial_cmp(&fa).unwrap()
    });
    for k in 0..(n - assigned) {
        counts[order[k % 3]] += 1;
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(seed_value, "split-shuffle"));
    let train = perm[..counts[0]].to_vec();
    let val = perm[counts[0]..counts[0] + counts[1]].to_vec();
    let test = perm[counts[0] + counts[1]..].to_vec();
    Ok(SplitIndices { train, val, test })
}

/// Configuration for the 2-D Gaussian-blob classification task.
///
/// Four clusters at `(±2, ±2)`; the two left clusters are pulled toward the
/// x-axis by `overlap_offset` so they overlap and no classifier can be
/// confident there. That region is what separates calibrated from
/// overconfident fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub per_class: usize,
    pub spread: f64,
    pub overlap_offset: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            per_class: 1000,
            spread: 0.8,
            overlap_offset: 1.5,
            seed: 0,
        }
    }
}

/// 2-D features plus labels, for training a small classifier end to end.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl PointDataset {
    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Array2::zeros((indices.len(), self.features.ncols()));
        let mut labels = Vec::with_capacity(indices.len());
        for (out, &i) in indices.iter().enumerate() {
            features.row_mut(out).assign(&self.features.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            features,
            labels,
            class_count: self.class_count,
        }
    }
}

/// Cluster centers after applying the overlap offset.
pub fn toy_centers(overlap_offset: f64) -> [[f64; 2]; 4] {
    [
        [2.0, 2.0],
        [2.0, -2.0],
        [-2.0, 2.0 - overlap_offset],
        [-2.0, -2.0 + overlap_offset],
    ]
}

/// Draw the blob dataset: `per_class` points around each center, rows
/// shuffled so splits are class-balanced in expectation.
pub fn generate_toy(cfg: &ToyConfig) -> Result<PointDataset> {
    if cfg.per_class == 0 {
        return Err(Error::InvalidConfig("per_class must be >= 1".into()));
    }
    if !cfg.spread.is_finite() || cfg.spread <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "spread must be positive, got {}",
            cfg.spread
        )));
    }
    let centers = toy_centers(cfg.overlap_offset);
    let n = 4 * cfg.per_class;
    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    let mut rng = seed::rng(cfg.seed, "toy-points");
    for (class, center) in centers.iter().enumerate() {
        for i in 0..cfg.per_class {
            let row = class * cfg.per_class + i;
            for d in 0..2 {
                let z: f64 = StandardNormal.sample(&mut rng);
                features[(row, d)] = center[d] + cfg.spread * z;
            }
            labels.push(class);
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(cfg.seed, "toy-shuffle"));
    let ds = PointDataset {
        features,
        labels,
        class_count: 4,
    };
    Ok(ds.subset(&perm))
}

/// Configuration for the miscalibrated-logit generator.
///
/// True logits `z ~ N(0, logit_sigma^2)` define both the label distribution
/// and (scaled by `scale`) the observed logits. `softmax(scale * z / T)`
/// recovers `softmax(z)` exactly at `T = scale`, so the optimal temperature
/// is known analytically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub class_count: usize,
    pub scale: f64,
    pub logit_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            class_count: 10,
            scale: 3.0,
            logit_sigma: 1.5,
            seed: 0,
        }
    }
}

/// Sample logits with known miscalibration (see [`SynthConfig`]).
pub fn synth_miscalibrated(cfg: &SynthConfig) -> Result<LogitDataset> {
    if cfg.n == 0 {
        return Err(Error::EmptyDataset);
    }
    if cfg.class_count < 2 {
        return Err(Error::InvalidConfig("need at least 2 classes".into()));
    }
    if !cfg.scale.is_finite() || cfg.scale <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "scale must be positive, got {}",
            cfg.scale
        )));
    }
    if !cfg.logit_sigma.is_finite() || cfg.logit_sigma <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "logit_sigma must be positive, got {}",
            cfg.logit_sigma
        )));
    }
    let mut rng = seed::rng(cfg.seed, "synth-logits");
    let c = cfg.class_count;
    let mut logits = Array2::zeros((cfg.n, c));
    let mut labels = Vec::with_capacity(cfg.n);
    let mut z = Array1::zeros(c);
    for r in 0..cfg.n {
        for j in 0..c {
            let e: f64 = StandardNormal.sample(&mut rng);
            z[j] = cfg.logit_sigma * e;
        }
        let p = crate::nn::softmax(z.as_slice().unwrap())?;
        let u: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        let mut label = c - 1;
        for (j, &pj) in p.iter().enumerate() {
            acc += pj;
            if u <= acc {
                label = j;
                break;
            }
        }
        labels.push(label);
        for j in 0..c {
            logits[(r, j)] = cfg.scale * z[j];
        }
    }
    LogitDataset::new(logits, labels)
}

/// `k` evenly spaced values covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect()
}
