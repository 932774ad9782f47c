//! Minibatch Adam over a flat parameter vector, with the two learning-rate
//! annealing schedules used by every trainer.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning-rate annealing over the course of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    /// Multiply the base rate by 0.1 at 50% and again at 75% of the epochs.
    Step,
    /// Decay linearly from the base rate toward zero across the run.
    Linear,
}

impl LrSchedule {
    /// Rate for `epoch` (0-based) out of `total` epochs.
    pub fn rate(&self, base: f64, epoch: usize, total: usize) -> f64 {
        match self {
            LrSchedule::Step => {
                let mut lr = base;
                if total >= 2 && epoch >= total / 2 {
                    lr *= 0.1;
                }
                if total >= 4 && epoch >= total * 3 / 4 {
                    lr *= 0.1;
                }
                lr
            }
            LrSchedule::Linear => base * (1.0 - epoch as f64 / total.max(1) as f64),
        }
    }
}

impl std::str::FromStr for LrSchedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(LrSchedule::Step),
            "linear" => Ok(LrSchedule::Linear),
            other => Err(Error::InvalidConfig(format!(
                "unknown lr schedule {other:?}, expected step or linear"
            ))),
        }
    }
}

/// Settings for a minibatch Adam run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub seed: u64,
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 100,
            learning_rate: 1e-2,
            schedule: LrSchedule::Linear,
            seed: 0,
        }
    }
}

/// Adam state over a flat parameter vector (first/second moment estimates
/// with bias correction). `step` performs gradient *descent*; pass the
/// gradient of a loss.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Array1<f64>,
    v: Array1<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Adam {
    pub fn new(dim: usize) -> Self {
        Self {
            m: Array1::zeros(dim),
            v: Array1::zeros(dim),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut Array1<f64>, grad: ArrayView1<f64>, lr: f64) {
        assert_eq!(params.len(), grad.len(), "gradient/parameter length mismatch");
        self.t += 1;
        let b1c = 1.0 - self.beta1.powi(self.t as i32);
        let b2c = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / b1c;
            let vh = self.v[i] / b2c;
            params[i] -= lr * mh / (vh.sqrt() + self.epsilon);
        }
    }
}

/// One row of a training log.
///
/// Every trainer fills the same columns so logs are comparable: `elbo` is
/// the maximized objective (the ELBO for variational runs, penalized mean
/// log-likelihood for MAP/ML), `loglik` its data term, and `kl` its
/// complexity term, so `elbo = loglik - kl` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epoch: usize,
    pub elbo: f64,
    pub loglik: f64,
    pub kl: f64,
    pub lr: f64,
}

/// CSV with header `epoch,elbo,loglik,kl,lr`.
pub fn train_log_to_csv(records: &[TrainRecord]) -> String {
    let mut out = String::from("epoch,elbo,loglik,kl,lr\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.elbo, r.loglik, r.kl, r.lr
        ));
    }
    out
}

/// Deterministic minibatch index stream: one shuffled pass per epoch.
pub fn epoch_batches(n: usize, batch_size: usize, rng: &mut impl rand::Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    idx.shuffle(rng);
    idx.chunks(batch_size).map(|c| c.to_vec()).collect()
}
