//! Mean-field variational Bayesian neural network over the calibration MLP.
//!
//! The posterior over weights is approximated by a fully factorized
//! Gaussian `q(θ) = Π N(θ_i | μ_i, σ_i²)` with `σ = softplus(ρ)`, trained
//! by maximizing the β-weighted ELBO
//!
//! ```text
//! (1/M) Σ_m  mean-per-sample log p(t | x, θ_m)  −  β · KL[q || p] / N
//! ```
//!
//! with two gradient estimators: plain reparameterization (`Mfvi`, one
//! weight draw shared by the whole batch) and the local reparameterization
//! trick (`Mfvilr`, pre-activations sampled independently per row, which
//! cuts gradient variance). Prediction averages the softmax output over K
//! posterior draws; K itself is selected on validation ECE.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::LogitDataset;
use crate::error::{Error, Result};
use crate::metrics::{self, ProbMatrix};
use crate::nn::{
    self, forward, forward_trace, grad_loglik_sum_logits, log_softmax_rows, MlpArchitecture,
    PointWeights,
};
use crate::opt::{epoch_batches, Adam, OptimConfig, TrainRecord};
use crate::seed;

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of [`softplus`]: `ln(e^y - 1)` for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

/// Numerically stable logistic function (the derivative of softplus).
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradient estimator used during ELBO optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// One weight sample per batch per MC draw.
    Mfvi,
    /// Local reparameterization: independent pre-activation noise per row.
    Mfvilr,
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mfvi" => Ok(Estimator::Mfvi),
            "mfvilr" => Ok(Estimator::Mfvilr),
            other => Err(Error::InvalidConfig(format!(
                "unknown estimator {other:?}, expected mfvi or mfvilr"
            ))),
        }
    }
}

/// Variational posterior of one dense layer: means and raw scales for the
/// weight matrix and bias vector. `σ = softplus(ρ)` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalLayer {
    pub mu_w: Array2<f64>,
    pub rho_w: Array2<f64>,
    pub mu_b: Array1<f64>,
    pub rho_b: Array1<f64>,
}

impl VariationalLayer {
    pub fn sigma_w(&self) -> Array2<f64> {
        self.rho_w.mapv(softplus)
    }

    pub fn sigma_b(&self) -> Array1<f64> {
        self.rho_b.mapv(softplus)
    }
}

/// Factorized Gaussian posterior over all MLP weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalParams {
    pub arch: MlpArchitecture,
    pub layers: Vec<VariationalLayer>,
}

impl VariationalParams {
    /// Posterior with every marginal fixed to N(mu_i, sigma²).
    pub fn constant_sigma(arch: &MlpArchitecture, mu: &PointWeights, sigma: f64) -> Result<Self> {
        if !mu.matches(arch) {
            return Err(Error::ShapeMismatch(
                "mean weights do not match the architecture".into(),
            ));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let rho = softplus_inv(sigma);
        let layers = mu
            .layers
            .iter()
            .map(|l| VariationalLayer {
                mu_w: l.w.clone(),
                rho_w: Array2::from_elem(l.w.dim(), rho),
                mu_b: l.b.clone(),
                rho_b: Array1::from_elem(l.b.len(), rho),
            })
            .collect();
        Ok(Self { arch: *arch, layers })
    }

    /// Means of the posterior as a concrete weight set.
    pub fn mean_weights(&self) -> PointWeights {
        PointWeights {
            layers: self
                .layers
                .iter()
                .map(|l| nn::DenseLayer {
                    w: l.mu_w.clone(),
                    b: l.mu_b.clone(),
                })
                .collect(),
        }
    }

    /// Total scalar parameter count of the underlying network (μ and ρ
    /// each have this many entries).
    pub fn weight_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.mu_w.len() + l.mu_b.len())
            .sum()
    }

    /// Sum of σ² over all weights — the "variance mass" of the posterior.
    pub fn total_variance(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| {
                l.rho_w.iter().map(|&r| softplus(r).powi(2)).sum::<f64>()
                    + l.rho_b.iter().map(|&r| softplus(r).powi(2)).sum::<f64>()
            })
            .sum()
    }

    /// Flat layout: per layer μ_W, ρ_W, μ_b, ρ_b.
    pub fn flatten(&self) -> Array1<f64> {
        let mut out = Vec::with_capacity(2 * self.weight_count());
        for l in &self.layers {
            out.extend(l.mu_w.iter().copied());
            out.extend(l.rho_w.iter().copied());
            out.extend(l.mu_b.iter().copied());
            out.extend(l.rho_b.iter().copied());
        }
        Array1::from(out)
    }

    pub fn from_flat(arch: &MlpArchitecture, flat: ndarray::ArrayView1<f64>) -> Result<Self> {
        let expected = 2 * arch.param_count();
        if flat.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "flat vector has {} entries, architecture needs {expected}",
                flat.len()
            )));
        }
        let mut pos = 0;
        let mut take = |n: usize| {
            let s = flat.slice(ndarray::s![pos..pos + n]).to_vec();
            pos += n;
            s
        };
        let layers = arch
            .layer_dims()
            .into_iter()
            .map(|(i, o)| {
                let mu_w = Array2::from_shape_vec((i, o), take(i * o)).expect("sized above");
                let rho_w = Array2::from_shape_vec((i, o), take(i * o)).expect("sized above");
                let mu_b = Array1::from(take(o));
                let rho_b = Array1::from(take(o));
                VariationalLayer {
                    mu_w,
                    rho_w,
                    mu_b,
                    rho_b,
                }
            })
            .collect();
        Ok(Self { arch: *arch, layers })
    }

    fn zeros_like(&self) -> Self {
        Self {
            arch: self.arch,
            layers: self
                .layers
                .iter()
                .map(|l| VariationalLayer {
                    mu_w: Array2::zeros(l.mu_w.dim()),
                    rho_w: Array2::zeros(l.rho_w.dim()),
                    mu_b: Array1::zeros(l.mu_b.len()),
                    rho_b: Array1::zeros(l.rho_b.len()),
                })
                .collect(),
        }
    }
}

/// Initial σ for fresh variational posteriors: near-deterministic, far
/// enough from zero that KL gradients stay alive.
pub const INIT_SIGMA: f64 = 0.05;

/// Fresh posterior: μ as in the point-estimate initializer, σ = 0.05.
pub fn init_variational(arch: &MlpArchitecture, seed_value: u64) -> Result<VariationalParams> {
    arch.validate()?;
    let mu = PointWeights::init(arch, &mut seed::rng(seed_value, "vi-init"));
    VariationalParams::constant_sigma(arch, &mu, INIT_SIGMA)
}

/// Closed-form KL from `q` to a zero-mean isotropic Gaussian prior with
/// the given variance: per scalar `½((σ² + μ²)/v − 1 + ln v − ln σ²)`.
pub fn kl_to_prior(vp: &VariationalParams, prior_variance: f64) -> f64 {
    let v = prior_variance;
    let scalar = |mu: f64, rho: f64| {
        let s2 = softplus(rho).powi(2);
        0.5 * ((s2 + mu * mu) / v - 1.0 + v.ln() - s2.ln())
    };
    vp.layers
        .iter()
        .map(|l| {
            l.mu_w
                .iter()
                .zip(l.rho_w.iter())
                .map(|(&m, &r)| scalar(m, r))
                .sum::<f64>()
                + l.mu_b
                    .iter()
                    .zip(l.rho_b.iter())
                    .map(|(&m, &r)| scalar(m, r))
                    .sum::<f64>()
        })
        .sum()
}

/// KL from `q` to the standard Gaussian prior: `Σ ½(σ² + μ² − 1 − ln σ²)`.
pub fn kl_to_standard_normal(vp: &VariationalParams) -> f64 {
    kl_to_prior(vp, 1.0)
}

/// Accumulate the gradient of `scale · KL[q || N(0, v)]` into `grad`.
fn add_kl_grad(vp: &VariationalParams, prior_variance: f64, scale: f64, grad: &mut VariationalParams) {
    let v = prior_variance;
    for (l, g) in vp.layers.iter().zip(grad.layers.iter_mut()) {
        let mut acc = |mu: f64, rho: f64| -> (f64, f64) {
            let s = softplus(rho);
            // dKL/dμ = μ/v ; dKL/dσ = σ/v − 1/σ ; dσ/dρ = sigmoid(ρ)
            (scale * mu / v, scale * (s / v - 1.0 / s) * sigmoid(rho))
        };
        azip_grad(&l.mu_w, &l.rho_w, &mut g.mu_w, &mut g.rho_w, &mut acc);
        for i in 0..l.mu_b.len() {
            let (dm, dr) = acc(l.mu_b[i], l.rho_b[i]);
            g.mu_b[i] += dm;
            g.rho_b[i] += dr;
        }
    }
}

fn azip_grad(
    mu: &Array2<f64>,
    rho: &Array2<f64>,
    gmu: &mut Array2<f64>,
    grho: &mut Array2<f64>,
    f: &mut impl FnMut(f64, f64) -> (f64, f64),
) {
    for ((i, j), &m) in mu.indexed_iter() {
        let (dm, dr) = f(m, rho[(i, j)]);
        gmu[(i, j)] += dm;
        grho[(i, j)] += dr;
    }
}

/// Standard-normal noise with the same shape as the weights.
fn sample_noise<R: Rng + ?Sized>(vp: &VariationalParams, rng: &mut R) -> PointWeights {
    PointWeights {
        layers: vp
            .layers
            .iter()
            .map(|l| nn::DenseLayer {
                w: Array2::from_shape_simple_fn(l.mu_w.dim(), || {
                    StandardNormal.sample(rng)
                }),
                b: Array1::from_shape_simple_fn(l.mu_b.len(), || {
                    StandardNormal.sample(rng)
                }),
            })
            .collect(),
    }
}

fn realize(vp: &VariationalParams, noise: &PointWeights) -> PointWeights {
    PointWeights {
        layers: vp
            .layers
            .iter()
            .zip(&noise.layers)
            .map(|(l, n)| nn::DenseLayer {
                w: &l.mu_w + &(l.sigma_w() * &n.w),
                b: &l.mu_b + &(l.sigma_b() * &n.b),
            })
            .collect(),
    }
}

/// Reparameterized posterior draw: `θ = μ + softplus(ρ) ⊙ ε`.
pub fn sample_weights<R: Rng + ?Sized>(vp: &VariationalParams, rng: &mut R) -> PointWeights {
    let noise = sample_noise(vp, rng);
    realize(vp, &noise)
}

/// One MC realization of the batch log-probabilities under plain MFVI:
/// a single weight draw shared across the batch.
pub fn forward_mfvi<R: Rng + ?Sized>(
    vp: &VariationalParams,
    batch: ArrayView2<f64>,
    rng: &mut R,
) -> Array2<f64> {
    let w = sample_weights(vp, rng);
    log_softmax_rows(&forward(&w, batch))
}

/// Per-layer state recorded by the local-reparameterization forward pass.
pub struct MfvilrTrace {
    /// Input to each layer (index 0 is the batch itself).
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activation standard deviations per layer.
    pub sds: Vec<Array2<f64>>,
    /// Noise draws per layer.
    pub eps: Vec<Array2<f64>>,
    /// Output-layer pre-activations (the sampled logits).
    pub logits: Array2<f64>,
}

/// The local-reparameterization pass with all per-layer state exposed;
/// `forward_mfvilr` is this plus a log-softmax.
pub fn forward_mfvilr_trace<R: Rng + ?Sized>(
    vp: &VariationalParams,
    batch: ArrayView2<f64>,
    rng: &mut R,
) -> MfvilrTrace {
    let depth = vp.layers.len();
    let mut inputs = Vec::with_capacity(depth);
    let mut sds = Vec::with_capacity(depth);
    let mut eps = Vec::with_capacity(depth);
    let mut h = batch.to_owned();
    let mut logits = Array2::zeros((0, 0));
    for (li, l) in vp.layers.iter().enumerate() {
        let mean = h.dot(&l.mu_w) + &l.mu_b;
        let var_w = l.sigma_w().mapv(|s| s * s);
        let var_b = l.sigma_b().mapv(|s| s * s);
        let var = h.mapv(|x| x * x).dot(&var_w) + &var_b;
        let sd = var.mapv(f64::sqrt);
        let e = Array2::from_shape_simple_fn(mean.dim(), || StandardNormal.sample(rng));
        let a = &mean + &(&sd * &e);
        inputs.push(h);
        sds.push(sd);
        eps.push(e);
        if li + 1 == depth {
            logits = a;
            h = Array2::zeros((0, 0));
        } else {
            h = a.mapv(|v| v.max(0.0));
        }
    }
    MfvilrTrace {
        inputs,
        sds,
        eps,
        logits,
    }
}

/// One MC realization under the local reparameterization trick:
/// pre-activations sampled directly with independent noise per row.
pub fn forward_mfvilr<R: Rng + ?Sized>(
    vp: &VariationalParams,
    batch: ArrayView2<f64>,
    rng: &mut R,
) -> Array2<f64> {
    log_softmax_rows(&forward_mfvilr_trace(vp, batch, rng).logits)
}

/// Backprop through the local-reparameterization forward pass.
/// `delta` is dLoss/dlogits; gradients accumulate into `grad`.
fn backward_mfvilr(
    vp: &VariationalParams,
    trace: &MfvilrTrace,
    delta_logits: &Array2<f64>,
    grad: &mut VariationalParams,
) {
    let mut delta = delta_logits.clone();
    for li in (0..vp.layers.len()).rev() {
        let l = &vp.layers[li];
        let h = &trace.inputs[li];
        let sd = &trace.sds[li];
        let e = &trace.eps[li];
        // a = m + sd·ε with m = h·μ_W + μ_b, sd² = (h∘h)·σ²_W + σ²_b
        let g = &mut grad.layers[li];
        g.mu_w += &h.t().dot(&delta);
        g.mu_b += &delta.sum_axis(Axis(0));
        // d(sd·ε)/d(var) = ε / (2·sd); guard the σ → 0 limit
        let mut dvar = delta.clone();
        ndarray::Zip::from(&mut dvar).and(e).and(sd).for_each(|d, &ev, &s| {
            *d *= ev / (2.0 * s.max(1e-300));
        });
        let dvar_w = h.mapv(|x| x * x).t().dot(&dvar);
        let dvar_b = dvar.sum_axis(Axis(0));
        // σ² = softplus(ρ)², so dσ²/dρ = 2σ·sigmoid(ρ)
        ndarray::Zip::from(&mut g.rho_w).and(&dvar_w).and(&l.rho_w).for_each(
            |gr, &dv, &r| {
                *gr += dv * 2.0 * softplus(r) * sigmoid(r);
            },
        );
        for i in 0..g.rho_b.len() {
            let r = l.rho_b[i];
            g.rho_b[i] += dvar_b[i] * 2.0 * softplus(r) * sigmoid(r);
        }
        if li > 0 {
            // input path: dh = δ·μ_Wᵀ + (dvar·σ²_Wᵀ) ∘ 2h
            let var_w = l.sigma_w().mapv(|s| s * s);
            let mut dh = delta.dot(&l.mu_w.t()) + &(dvar.dot(&var_w.t()) * &h.mapv(|x| 2.0 * x));
            // ReLU mask of the producing layer
            ndarray::Zip::from(&mut dh).and(h).for_each(|d, &hv| {
                if hv <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = dh;
        }
    }
}

/// Training configuration for the variational calibrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnnTrainConfig {
    pub arch: MlpArchitecture,
    pub beta: f64,
    pub elbo_samples: usize,
    pub estimator: Estimator,
    pub prior_variance: f64,
    pub optim: OptimConfig,
}

impl BnnTrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        self.optim.validate()?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.elbo_samples == 0 {
            return Err(Error::InvalidConfig("elbo_samples must be >= 1".into()));
        }
        if !(self.prior_variance.is_finite() && self.prior_variance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "prior_variance must be positive, got {}",
                self.prior_variance
            )));
        }
        Ok(())
    }
}

/// ELBO of one batch: `(1/M) Σ_m mean-loglik(θ_m) − β·KL/N`.
///
/// KL is divided by the full dataset size `N`, not the batch size, so
/// summing batch objectives over an epoch estimates the full objective and
/// minibatch gradients are unbiased.
pub fn elbo<R: Rng + ?Sized>(
    vp: &VariationalParams,
    batch: ArrayView2<f64>,
    labels: &[usize],
    m_samples: usize,
    beta: f64,
    dataset_size: usize,
    estimator: Estimator,
    prior_variance: f64,
    rng: &mut R,
) -> Result<f64> {
    let (value, _) = elbo_impl(
        vp,
        batch,
        labels,
        m_samples,
        beta,
        dataset_size,
        estimator,
        prior_variance,
        rng,
        false,
    )?;
    Ok(value)
}

/// ELBO and its gradient with respect to every (μ, ρ).
#[allow(clippy::too_many_arguments)]
pub fn elbo_with_grad<R: Rng + ?Sized>(
    vp: &VariationalParams,
    batch: ArrayView2<f64>,
    labels: &[usize],
    m_samples: usize,
    beta: f64,
    dataset_size: usize,
    estimator: Estimator,
    prior_variance: f64,
    rng: &mut R,
) -> Result<(f64, VariationalParams)> {
    let (value, grad) = elbo_impl(
        vp,
        batch,
        labels,
        m_samples,
        beta,
        dataset_size,
        estimator,
        prior_variance,
        rng,
        true,
    )?;
    Ok((value, grad.expect("requested gradient")))
}

#[allow(clippy::too_many_arguments)]
fn elbo_impl<R: Rng + ?Sized>(
    vp: &VariationalParams,
    batch: ArrayView2<f64>,
    labels: &[usize],
    m_samples: usize,
    beta: f64,
    dataset_size: usize,
    estimator: Estimator,
    prior_variance: f64,
    rng: &mut R,
    want_grad: bool,
) -> Result<(f64, Option<VariationalParams>)> {
    if m_samples == 0 {
        return Err(Error::InvalidConfig("elbo_samples must be >= 1".into()));
    }
    if labels.len() != batch.nrows() || batch.nrows() == 0 {
        return Err(Error::ShapeMismatch(format!(
            "batch of {} rows with {} labels",
            batch.nrows(),
            labels.len()
        )));
    }
    let b = labels.len() as f64;
    let m = m_samples as f64;
    let mut grad = want_grad.then(|| vp.zeros_like());
    let mut data_term = 0.0;

    for _ in 0..m_samples {
        match estimator {
            Estimator::Mfvi => {
                let noise = sample_noise(vp, rng);
                let w = realize(vp, &noise);
                let trace = forward_trace(&w, batch);
                let lp = log_softmax_rows(&trace.logits);
                data_term += nn::log_lik_sum(&lp, labels) / b / m;
                if let Some(g) = grad.as_mut() {
                    // ascent direction scaled for the (1/M)·mean objective
                    let mut delta = grad_loglik_sum_logits(&lp, labels);
                    delta.mapv_inplace(|v| v / b / m);
                    accumulate_mfvi_grad(vp, &noise, &trace, &delta, g);
                }
            }
            Estimator::Mfvilr => {
                let trace = forward_mfvilr_trace(vp, batch, rng);
                let lp = log_softmax_rows(&trace.logits);
                data_term += nn::log_lik_sum(&lp, labels) / b / m;
                if let Some(g) = grad.as_mut() {
                    let mut delta = grad_loglik_sum_logits(&lp, labels);
                    delta.mapv_inplace(|v| v / b / m);
                    backward_mfvilr(vp, &trace, &delta, g);
                }
            }
        }
    }

    let kl = kl_to_prior(vp, prior_variance);
    let value = data_term - beta * kl / dataset_size as f64;
    if !value.is_finite() {
        return Err(Error::Divergence(format!(
            "ELBO became non-finite (data term {data_term}, KL {kl})"
        )));
    }
    if let Some(g) = grad.as_mut() {
        add_kl_grad(vp, prior_variance, -beta / dataset_size as f64, g);
    }
    Ok((value, grad))
}

/// MFVI chain rule: dL/dμ = dL/dθ, dL/dρ = dL/dθ · ε · sigmoid(ρ).
fn accumulate_mfvi_grad(
    vp: &VariationalParams,
    noise: &PointWeights,
    trace: &nn::ForwardTrace,
    delta: &Array2<f64>,
    grad: &mut VariationalParams,
) {
    let w = realize(vp, noise);
    let (gw, _) = nn::backward(&w, trace, delta);
    for li in 0..vp.layers.len() {
        let l = &vp.layers[li];
        let n = &noise.layers[li];
        let gl = &gw.layers[li];
        let g = &mut grad.layers[li];
        g.mu_w += &gl.w;
        g.mu_b += &gl.b;
        ndarray::Zip::from(&mut g.rho_w)
            .and(&gl.w)
            .and(&n.w)
            .and(&l.rho_w)
            .for_each(|gr, &dw, &ev, &r| *gr += dw * ev * sigmoid(r));
        for i in 0..g.rho_b.len() {
            g.rho_b[i] += gl.b[i] * n.b[i] * sigmoid(l.rho_b[i]);
        }
    }
}

/// Outcome of a variational training run.
#[derive(Debug, Clone, PartialEq)]
pub struct BnnTrainResult {
    pub vp: VariationalParams,
    pub log: Vec<TrainRecord>,
    /// True if train accuracy stayed below `1.5 / C` after the warmup
    /// fraction of epochs — the fit collapsed to noise.
    pub degraded: bool,
}

/// Fraction of epochs treated as warmup before degradation checks.
const DEGRADED_WARMUP: f64 = 0.1;

/// Minibatch Adam ascent on the ELBO. Deterministic per `optim.seed`.
pub fn train_bnn_on(
    inputs: ArrayView2<f64>,
    labels: &[usize],
    cfg: &BnnTrainConfig,
) -> Result<BnnTrainResult> {
    cfg.validate()?;
    if labels.is_empty() || inputs.nrows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} input rows with {} labels",
            inputs.nrows(),
            labels.len()
        )));
    }
    if inputs.ncols() != cfg.arch.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "architecture expects input_dim {}, data has {} columns",
            cfg.arch.input_dim,
            inputs.ncols()
        )));
    }
    let n = labels.len();
    let run_seed = cfg.optim.seed;
    let mut vp = init_variational(&cfg.arch, run_seed)?;
    let mut flat = vp.flatten();
    let mut adam = Adam::new(flat.len());
    let mut batch_rng = seed::rng(run_seed, "vi-batches");
    let mut noise_rng = seed::rng(run_seed, "vi-noise");
    let mut log = Vec::with_capacity(cfg.optim.epochs);
    // Degraded = the fit never rises above chance-level accuracy once the
    // warmup epochs are past. A single slow epoch is not enough to flag.
    let mut post_warmup_epochs = 0usize;
    let mut best_post_warmup_acc = 0.0f64;
    let warmup = (cfg.optim.epochs as f64 * DEGRADED_WARMUP).ceil() as usize;

    for epoch in 0..cfg.optim.epochs {
        let lr = cfg
            .optim
            .schedule
            .rate(cfg.optim.learning_rate, epoch, cfg.optim.epochs);
        for batch in epoch_batches(n, cfg.optim.batch_size, &mut batch_rng) {
            let bx = take_rows(inputs, &batch);
            let by: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (_, g) = elbo_with_grad(
                &vp,
                bx.view(),
                &by,
                cfg.elbo_samples,
                cfg.beta,
                n,
                cfg.estimator,
                cfg.prior_variance,
                &mut noise_rng,
            )?;
            // Adam descends; negate the ascent gradient.
            let gflat = g.flatten().mapv(|v| -v);
            adam.step(&mut flat, gflat.view(), lr);
            vp = VariationalParams::from_flat(&cfg.arch, flat.view())?;
        }

        // end-of-epoch evaluation on the full train set with a fixed
        // per-epoch stream, for the log and the degradation check
        let mut eval_rng: ChaCha8Rng = rand_chacha::rand_core::SeedableRng::seed_from_u64(
            seed::derive_indexed(run_seed, "vi-eval", epoch as u64),
        );
        let mut probs = Array2::zeros((n, cfg.arch.output_dim));
        let mut loglik = 0.0;
        for _ in 0..cfg.elbo_samples {
            let lp = match cfg.estimator {
                Estimator::Mfvi => forward_mfvi(&vp, inputs, &mut eval_rng),
                Estimator::Mfvilr => forward_mfvilr(&vp, inputs, &mut eval_rng),
            };
            loglik += nn::log_lik_sum(&lp, labels) / n as f64 / cfg.elbo_samples as f64;
            probs += &lp.mapv(f64::exp);
        }
        probs /= cfg.elbo_samples as f64;
        let kl_term = cfg.beta * kl_to_prior(&vp, cfg.prior_variance) / n as f64;
        let elbo_val = loglik - kl_term;
        if !elbo_val.is_finite() {
            return Err(Error::Divergence(format!(
                "training objective became non-finite at epoch {epoch}"
            )));
        }
        log.push(TrainRecord {
            epoch,
            elbo: elbo_val,
            loglik,
            kl: kl_term,
            lr,
        });
        if epoch >= warmup {
            post_warmup_epochs += 1;
            best_post_warmup_acc = best_post_warmup_acc.max(train_accuracy(&probs, labels));
        }
    }
    let degraded =
        post_warmup_epochs > 0 && best_post_warmup_acc < 1.5 / cfg.arch.output_dim as f64;
    Ok(BnnTrainResult { vp, log, degraded })
}

fn train_accuracy(probs: &Array2<f64>, labels: &[usize]) -> f64 {
    let mut hits = 0usize;
    for (i, &l) in labels.iter().enumerate() {
        let row = probs.row(i);
        let mut best = 0;
        let mut best_p = row[0];
        for (c, &p) in row.iter().enumerate().skip(1) {
            if p > best_p {
                best = c;
                best_p = p;
            }
        }
        if best == l {
            hits += 1;
        }
    }
    hits as f64 / labels.len() as f64
}

/// Variational training over a logit dataset.
pub fn train_bnn(ds: &LogitDataset, cfg: &BnnTrainConfig) -> Result<BnnTrainResult> {
    train_bnn_on(ds.logits.view(), &ds.labels, cfg)
}

fn take_rows(inputs: ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), inputs.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&inputs.row(i));
    }
    out
}

/// Monte Carlo predictive configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictiveConfig {
    pub k: usize,
    pub seed: u64,
}

impl PredictiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("predictive K must be >= 1".into()));
        }
        Ok(())
    }
}

/// Posterior predictive: mean over K weight draws of the softmax output.
///
/// Draws consume one fixed stream seeded by `pc.seed`, so the first K
/// draws of a larger run are bit-identical to a direct K-draw run — the
/// property `select_k` relies on.
pub fn predict_bnn_on(
    vp: &VariationalParams,
    inputs: ArrayView2<f64>,
    pc: &PredictiveConfig,
) -> Result<ProbMatrix> {
    pc.validate()?;
    if inputs.ncols() != vp.arch.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "posterior expects input_dim {}, data has {} columns",
            vp.arch.input_dim,
            inputs.ncols()
        )));
    }
    let mut rng = seed::rng(pc.seed, "predictive");
    let mut mean = Array2::zeros((inputs.nrows(), vp.arch.output_dim));
    for k in 1..=pc.k {
        // Incremental mean rather than sum-then-divide: identical draws
        // leave it bitwise unchanged, so a collapsed posterior predicts
        // identically for every K and ECE ties are exact.
        let mut delta = forward_mfvi(vp, inputs, &mut rng).mapv(f64::exp);
        delta -= &mean;
        mean.scaled_add(1.0 / k as f64, &delta);
    }
    ProbMatrix::new(mean)
}

/// Posterior predictive over a logit dataset.
pub fn predict_bnn(
    vp: &VariationalParams,
    ds: &LogitDataset,
    pc: &PredictiveConfig,
) -> Result<ProbMatrix> {
    predict_bnn_on(vp, ds.logits.view(), pc)
}

/// Default grid for validation-based K selection.
pub const DEFAULT_K_GRID: [usize; 7] = [1, 3, 10, 30, 100, 300, 1000];

/// The ECE-vs-K curve and its argmin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k_star: usize,
    /// `(K, validation ECE at K)` for every grid entry.
    pub curve: Vec<(usize, f64)>,
}

/// Pick the MC sample count by validation ECE.
///
/// One pass draws `max(grid)` samples; each grid entry is evaluated on the
/// running mean of its first K draws, so the whole curve shares one sample
/// stream and equals what `predict_bnn` would return for that K. Ties go
/// to the smallest K.
pub fn select_k_on(
    vp: &VariationalParams,
    inputs: ArrayView2<f64>,
    labels: &[usize],
    k_grid: &[usize],
    seed_value: u64,
    bin_count: usize,
) -> Result<KSelection> {
    if k_grid.is_empty() {
        return Err(Error::InvalidConfig("k grid is empty".into()));
    }
    if k_grid[0] == 0 {
        return Err(Error::InvalidConfig("k grid entries must be >= 1".into()));
    }
    for w in k_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidConfig(
                "k grid must be strictly ascending".into(),
            ));
        }
    }
    if inputs.ncols() != vp.arch.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "params expect input_dim {}, data has {} columns",
            vp.arch.input_dim,
            inputs.ncols()
        )));
    }
    if inputs.nrows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} input rows with {} labels",
            inputs.nrows(),
            labels.len()
        )));
    }
    let mut rng = seed::rng(seed_value, "predictive");
    let mut mean = Array2::zeros((inputs.nrows(), vp.arch.output_dim));
    let mut curve = Vec::with_capacity(k_grid.len());
    let mut next = 0usize;
    let k_max = *k_grid.last().expect("non-empty grid");
    for k in 1..=k_max {
        // Same incremental-mean update as `predict_bnn_on`, so every
        // checkpoint is bitwise identical to a direct K-draw prediction.
        let mut delta = forward_mfvi(vp, inputs, &mut rng).mapv(f64::exp);
        delta -= &mean;
        mean.scaled_add(1.0 / k as f64, &delta);
        if k == k_grid[next] {
            let pm = ProbMatrix::new(mean.clone())?;
            curve.push((k, metrics::ece(&pm, labels, bin_count)?));
            next += 1;
        }
    }
    let mut k_star = curve[0].0;
    let mut best = curve[0].1;
    for &(k, e) in &curve[1..] {
        if e < best {
            best = e;
            k_star = k;
        }
    }
    Ok(KSelection { k_star, curve })
}

/// `select_k_on` over a held-out logit dataset.
pub fn select_k(
    vp: &VariationalParams,
    val: &LogitDataset,
    k_grid: &[usize],
    seed_value: u64,
    bin_count: usize,
) -> Result<KSelection> {
    if val.class_count() != vp.arch.input_dim {
        return Err(Error::ClassCountMismatch {
            expected: vp.arch.input_dim,
            found: val.class_count(),
        });
    }
    select_k_on(
        vp,
        val.logits.view(),
        &val.labels,
        k_grid,
        seed_value,
        bin_count,
    )
}
