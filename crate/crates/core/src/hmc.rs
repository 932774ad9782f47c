//! Hamiltonian Monte Carlo over small-network weights.
//!
//! This is the gold-standard posterior for the 2-D demo study: a
//! Metropolis-corrected HMC chain with identity mass matrix and a fixed
//! step size (optionally auto-tuned during burn-in to an acceptance rate
//! of 0.65–0.85). It is deliberately plain — no NUTS, no mass adaptation —
//! because the networks it samples have at most a few hundred weights.
//!
//! Unlike the MAP/ELBO objectives, the target here is the full-data
//! unnormalized log posterior `Σ_i log p(t_i | x_i, w) + log N(w | 0, vI)`
//! including the prior's normalizing constant.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ProbMatrix;
use crate::nn::{self, forward, forward_trace, grad_loglik_sum_logits, log_softmax_rows,
    softmax_rows, MlpArchitecture, PointWeights};
use crate::seed;

/// A differentiable unnormalized log density over a flat state vector.
pub trait LogDensity {
    fn dim(&self) -> usize;
    /// Value and gradient at `x`. Non-finite values are reported as
    /// divergence errors.
    fn log_density_grad(&self, x: &Array1<f64>) -> Result<(f64, Array1<f64>)>;
}

/// Sampler controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub step_size: f64,
    pub leapfrog_steps: usize,
    pub num_samples: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub prior_variance: f64,
    pub seed: u64,
    /// Adjust the step size during burn-in toward 0.65–0.85 acceptance.
    pub auto_step_size: bool,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            step_size: 0.005,
            leapfrog_steps: 30,
            num_samples: 2000,
            burn_in: 2000,
            thinning: 2,
            prior_variance: 1.0,
            seed: 0,
            auto_step_size: true,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::InvalidConfig("leapfrog_steps must be >= 1".into()));
        }
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("num_samples must be >= 1".into()));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be >= 1".into()));
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

/// Post-burn-in, thinned draws from the weight posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub arch: MlpArchitecture,
    pub samples: Vec<PointWeights>,
    pub acceptance_rate: f64,
}

/// One chain iteration for the diagnostics CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainDiag {
    pub iter: usize,
    pub accept: bool,
    pub log_post: f64,
    pub energy_error: f64,
}

/// CSV with header `iter,accept,log_post,energy_error`.
pub fn diagnostics_to_csv(diag: &[ChainDiag]) -> String {
    let mut out = String::from("iter,accept,log_post,energy_error\n");
    for d in diag {
        out.push_str(&format!(
            "{},{},{},{}\n",
            d.iter,
            u8::from(d.accept),
            d.log_post,
            d.energy_error
        ));
    }
    out
}

/// Everything a chain run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct HmcRun {
    pub samples: PosteriorSamples,
    pub diagnostics: Vec<ChainDiag>,
    /// Step size in effect after burn-in adaptation.
    pub final_step_size: f64,
    /// Post-burn-in acceptance below 0.1 — the chain is barely moving.
    pub low_acceptance: bool,
}

/// Unnormalized BNN weight posterior: full-data log-likelihood plus a
/// zero-mean Gaussian log prior (with its normalizing constant).
pub struct BnnPosterior<'a> {
    pub arch: &'a MlpArchitecture,
    pub inputs: ArrayView2<'a, f64>,
    pub labels: &'a [usize],
    pub prior_variance: f64,
}

impl<'a> BnnPosterior<'a> {
    pub fn new(
        arch: &'a MlpArchitecture,
        inputs: ArrayView2<'a, f64>,
        labels: &'a [usize],
        prior_variance: f64,
    ) -> Result<Self> {
        arch.validate()?;
        if inputs.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} input rows with {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        if inputs.ncols() != arch.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "posterior expects input_dim {}, data has {} columns",
                arch.input_dim,
                inputs.ncols()
            )));
        }
        if !(prior_variance.is_finite() && prior_variance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "prior_variance must be positive, got {prior_variance}"
            )));
        }
        Ok(Self {
            arch,
            inputs,
            labels,
            prior_variance,
        })
    }
}

impl LogDensity for BnnPosterior<'_> {
    fn dim(&self) -> usize {
        self.arch.param_count()
    }

    fn log_density_grad(&self, x: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        let w = PointWeights::from_flat(self.arch, x.view())?;
        let (value, grad) =
            log_unnormalized_posterior(&w, self.inputs, self.labels, self.prior_variance)?;
        Ok((value, grad.flatten()))
    }
}

/// `Σ_i log softmax-likelihood + log N(w | 0, vI)` and its exact gradient.
///
/// Accepts an empty dataset, in which case the target reduces to the prior
/// alone.
pub fn log_unnormalized_posterior(
    w: &PointWeights,
    inputs: ArrayView2<f64>,
    labels: &[usize],
    prior_variance: f64,
) -> Result<(f64, PointWeights)> {
    let v = prior_variance;
    let d = w.param_count() as f64;
    let mut value = -0.5 * d * (2.0 * std::f64::consts::PI * v).ln() - w.squared_norm() / (2.0 * v);
    let mut grad = w.clone();
    for l in &mut grad.layers {
        l.w.mapv_inplace(|p| -p / v);
        l.b.mapv_inplace(|p| -p / v);
    }
    if !labels.is_empty() {
        let trace = forward_trace(w, inputs);
        let lp = log_softmax_rows(&trace.logits);
        value += nn::log_lik_sum(&lp, labels);
        let delta = grad_loglik_sum_logits(&lp, labels);
        let (glik, _) = nn::backward(w, &trace, &delta);
        grad.scaled_add(1.0, &glik);
    }
    if !value.is_finite() {
        return Err(Error::Divergence(format!(
            "log posterior is non-finite ({value})"
        )));
    }
    Ok((value, grad))
}

/// End state of a leapfrog trajectory.
pub struct LeapfrogResult {
    pub x: Array1<f64>,
    pub p: Array1<f64>,
    pub log_density: f64,
}

/// `steps` half-kick/drift/half-kick leapfrog updates with identity mass.
/// Symplectic, hence volume-preserving and reversible up to float error.
pub fn leapfrog(
    target: &dyn LogDensity,
    x0: &Array1<f64>,
    p0: &Array1<f64>,
    step_size: f64,
    steps: usize,
) -> Result<LeapfrogResult> {
    if steps == 0 {
        return Err(Error::InvalidConfig("leapfrog needs at least one step".into()));
    }
    if !(step_size.is_finite() && step_size > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "step_size must be positive, got {step_size}"
        )));
    }
    let mut x = x0.clone();
    let mut p = p0.clone();
    let (_, mut g) = target.log_density_grad(&x)?;
    p.scaled_add(step_size / 2.0, &g);
    for s in 0..steps {
        x.scaled_add(step_size, &p);
        let (value, grad) = target.log_density_grad(&x)?;
        g = grad;
        if s + 1 == steps {
            p.scaled_add(step_size / 2.0, &g);
            if !p.iter().all(|v| v.is_finite()) || !x.iter().all(|v| v.is_finite()) {
                return Err(Error::Divergence("leapfrog state is non-finite".into()));
            }
            return Ok(LeapfrogResult {
                x,
                p,
                log_density: value,
            });
        }
        p.scaled_add(step_size, &g);
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence("leapfrog momentum is non-finite".into()));
        }
    }
    unreachable!("loop returns on the final step");
}

const TARGET_ACCEPT_LO: f64 = 0.65;
const TARGET_ACCEPT_HI: f64 = 0.85;
const ADAPT_WINDOW: usize = 50;
const LOW_ACCEPTANCE: f64 = 0.1;

/// Run a Metropolis-corrected HMC chain on an arbitrary target.
///
/// Divergent trajectories count as rejections. With `auto_step_size`, the
/// step size is scaled by 0.7/1.3 after every 50 burn-in iterations whose
/// acceptance rate falls outside 0.65–0.85; it is frozen after burn-in.
pub fn sample_chain(
    target: &dyn LogDensity,
    x0: Array1<f64>,
    cfg: &HmcConfig,
) -> Result<(Vec<Array1<f64>>, Vec<ChainDiag>, f64)> {
    cfg.validate()?;
    if x0.len() != target.dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} entries, target has dimension {}",
            x0.len(),
            target.dim()
        )));
    }
    let mut rng = seed::rng(cfg.seed, "hmc-chain");
    let mut x = x0;
    let (mut logp, _) = target.log_density_grad(&x)?;
    let mut eps = cfg.step_size;
    let total = cfg.burn_in + cfg.num_samples * cfg.thinning;
    let mut samples = Vec::with_capacity(cfg.num_samples);
    let mut diag = Vec::with_capacity(total);
    let mut window_accepts = 0usize;

    for iter in 0..total {
        let p0 = Array1::from_shape_simple_fn(x.len(), || StandardNormal.sample(&mut rng));
        let h_old = -logp + 0.5 * p0.dot(&p0);
        let (accept, energy_error) = match leapfrog(target, &x, &p0, eps, cfg.leapfrog_steps) {
            Ok(res) => {
                let h_new = -res.log_density + 0.5 * res.p.dot(&res.p);
                let de = h_new - h_old;
                let u: f64 = rng.random_range(0.0..1.0);
                let accept = de <= 0.0 || u < (-de).exp();
                if accept {
                    x = res.x;
                    logp = res.log_density;
                }
                (accept, de)
            }
            Err(Error::Divergence(_)) => (false, f64::INFINITY),
            Err(e) => return Err(e),
        };
        diag.push(ChainDiag {
            iter,
            accept,
            log_post: logp,
            energy_error,
        });
        if iter < cfg.burn_in {
            if accept {
                window_accepts += 1;
            }
            if cfg.auto_step_size && (iter + 1) % ADAPT_WINDOW == 0 {
                let rate = window_accepts as f64 / ADAPT_WINDOW as f64;
                if rate < TARGET_ACCEPT_LO {
                    eps *= 0.7;
                } else if rate > TARGET_ACCEPT_HI {
                    eps *= 1.3;
                }
                window_accepts = 0;
            }
        } else if (iter - cfg.burn_in) % cfg.thinning == cfg.thinning - 1 {
            samples.push(x.clone());
        }
    }
    Ok((samples, diag, eps))
}

/// Sample the weight posterior of a calibration network. Accepts an empty
/// dataset (prior-only target). Deterministic per `cfg.seed`.
pub fn hmc_sample_on(
    inputs: ArrayView2<f64>,
    labels: &[usize],
    arch: &MlpArchitecture,
    cfg: &HmcConfig,
) -> Result<HmcRun> {
    let target = BnnPosterior::new(arch, inputs, labels, cfg.prior_variance)?;
    let x0 = PointWeights::init(arch, &mut seed::rng(cfg.seed, "hmc-init")).flatten();
    let (flat_samples, diagnostics, final_step_size) = sample_chain(&target, x0, cfg)?;
    let post: Vec<&ChainDiag> = diagnostics.iter().skip(cfg.burn_in).collect();
    let acceptance_rate =
        post.iter().filter(|d| d.accept).count() as f64 / post.len().max(1) as f64;
    let samples = flat_samples
        .into_iter()
        .map(|f| PointWeights::from_flat(arch, f.view()))
        .collect::<Result<Vec<_>>>()?;
    Ok(HmcRun {
        samples: PosteriorSamples {
            arch: *arch,
            samples,
            acceptance_rate,
        },
        diagnostics,
        final_step_size,
        low_acceptance: acceptance_rate < LOW_ACCEPTANCE,
    })
}

/// Sample the posterior for a logit dataset.
pub fn hmc_sample(
    ds: &crate::data::LogitDataset,
    arch: &MlpArchitecture,
    cfg: &HmcConfig,
) -> Result<HmcRun> {
    hmc_sample_on(ds.logits.view(), &ds.labels, arch, cfg)
}

/// Posterior predictive: mean softmax output over all retained samples.
pub fn predict_hmc_on(samples: &PosteriorSamples, inputs: ArrayView2<f64>) -> Result<ProbMatrix> {
    if samples.samples.is_empty() {
        return Err(Error::InvalidConfig("no posterior samples".into()));
    }
    if inputs.ncols() != samples.arch.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "samples expect input_dim {}, data has {} columns",
            samples.arch.input_dim,
            inputs.ncols()
        )));
    }
    let mut acc = Array2::zeros((inputs.nrows(), samples.arch.output_dim));
    for w in &samples.samples {
        acc += &softmax_rows(&forward(w, inputs));
    }
    acc /= samples.samples.len() as f64;
    ProbMatrix::new(acc)
}

/// Posterior predictive over a logit dataset.
pub fn predict_hmc(
    samples: &PosteriorSamples,
    ds: &crate::data::LogitDataset,
) -> Result<ProbMatrix> {
    predict_hmc_on(samples, ds.logits.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::predict_point_on;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand_chacha::rand_core::SeedableRng;

    /// Independent Gaussian target for sampler tests.
    pub(super) struct GaussianTarget {
        pub mean: Array1<f64>,
        pub variance: f64,
    }

    impl LogDensity for GaussianTarget {
        fn dim(&self) -> usize {
            self.mean.len()
        }
        fn log_density_grad(&self, x: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
            let d = x - &self.mean;
            let value = -d.dot(&d) / (2.0 * self.variance);
            let grad = d.mapv(|v| -v / self.variance);
            Ok((value, grad))
        }
    }

    #[test]
    fn posterior_gradient_matches_finite_differences() {
        let arch = MlpArchitecture::calibration(2, 1, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w = PointWeights::init(&arch, &mut rng);
        let x = array![[0.4, -0.2], [1.0, 0.3], [-0.7, 0.8]];
        let labels = vec![0usize, 1, 1];
        let (_, grad) = log_unnormalized_posterior(&w, x.view(), &labels, 2.0).unwrap();
        let ga = grad.flatten();
        let flat = w.flatten();
        let h = 1e-5;
        for i in 0..flat.len() {
            let mut plus = flat.clone();
            plus[i] += h;
            let mut minus = flat.clone();
            minus[i] -= h;
            let vp = log_unnormalized_posterior(
                &PointWeights::from_flat(&arch, plus.view()).unwrap(),
                x.view(),
                &labels,
                2.0,
            )
            .unwrap()
            .0;
            let vm = log_unnormalized_posterior(
                &PointWeights::from_flat(&arch, minus.view()).unwrap(),
                x.view(),
                &labels,
                2.0,
            )
            .unwrap()
            .0;
            let fd = (vp - vm) / (2.0 * h);
            let denom = fd.abs().max(ga[i].abs()).max(1e-8);
            assert!(
                (fd - ga[i]).abs() / denom < 1e-4,
                "param {i}: analytic {} vs fd {fd}",
                ga[i]
            );
        }
    }

    #[test]
    fn prior_term_is_the_gaussian_constant_at_zero() {
        let arch = MlpArchitecture::calibration(2, 0, 0).unwrap();
        let w = PointWeights::zeros(&arch);
        let empty = Array2::zeros((0, 2));
        let v = 3.0;
        let (value, grad) = log_unnormalized_posterior(&w, empty.view(), &[], v).unwrap();
        let d = w.param_count() as f64;
        assert_abs_diff_eq!(
            value,
            -0.5 * d * (2.0 * std::f64::consts::PI * v).ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(grad.squared_norm(), 0.0, epsilon = 1e-24);
    }

    #[test]
    fn likelihood_part_is_additive_under_duplication() {
        let arch = MlpArchitecture::calibration(2, 1, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let w = PointWeights::init(&arch, &mut rng);
        let x = array![[0.4, -0.2], [1.0, 0.3]];
        let labels = vec![0usize, 1];
        let empty = Array2::zeros((0, 2));
        let prior = log_unnormalized_posterior(&w, empty.view(), &[], 1.0).unwrap().0;
        let single = log_unnormalized_posterior(&w, x.view(), &labels, 1.0).unwrap().0;
        let mut x2 = Array2::zeros((4, 2));
        x2.slice_mut(ndarray::s![..2, ..]).assign(&x);
        x2.slice_mut(ndarray::s![2.., ..]).assign(&x);
        let double = log_unnormalized_posterior(&w, x2.view(), &[0, 1, 0, 1], 1.0)
            .unwrap()
            .0;
        assert_abs_diff_eq!(double - prior, 2.0 * (single - prior), epsilon = 1e-9);
    }

    #[test]
    fn leapfrog_is_reversible() {
        let target = GaussianTarget {
            mean: Array1::zeros(3),
            variance: 1.0,
        };
        let x0 = array![0.3, -1.2, 0.7];
        let p0 = array![0.5, 0.1, -0.9];
        let fwd = leapfrog(&target, &x0, &p0, 0.05, 25).unwrap();
        let back = leapfrog(&target, &fwd.x, &fwd.p.mapv(|v| -v), 0.05, 25).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(back.x[i], x0[i], epsilon = 1e-8);
            assert_abs_diff_eq!(-back.p[i], p0[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn leapfrog_conserves_energy_on_gaussian() {
        let target = GaussianTarget {
            mean: Array1::zeros(2),
            variance: 1.0,
        };
        let x0 = array![1.0, -0.5];
        let p0 = array![-0.3, 0.8];
        let (lp0, _) = target.log_density_grad(&x0).unwrap();
        let h0 = -lp0 + 0.5 * p0.dot(&p0);
        let res = leapfrog(&target, &x0, &p0, 0.01, 50).unwrap();
        let h1 = -res.log_density + 0.5 * res.p.dot(&res.p);
        assert!((h1 - h0).abs() < 1e-3, "energy drift {}", (h1 - h0).abs());
    }

    #[test]
    fn leapfrog_rejects_zero_steps() {
        let target = GaussianTarget {
            mean: Array1::zeros(1),
            variance: 1.0,
        };
        assert!(leapfrog(&target, &array![0.0], &array![1.0], 0.1, 0).is_err());
    }

    #[test]
    fn gaussian_acceptance_is_high() {
        let target = GaussianTarget {
            mean: Array1::zeros(1),
            variance: 1.0,
        };
        let cfg = HmcConfig {
            step_size: 0.1,
            leapfrog_steps: 20,
            num_samples: 500,
            burn_in: 100,
            thinning: 1,
            auto_step_size: false,
            seed: 7,
            ..Default::default()
        };
        let (samples, diag, _) = sample_chain(&target, array![3.0], &cfg).unwrap();
        assert_eq!(samples.len(), 500);
        let accepted = diag
            .iter()
            .skip(cfg.burn_in)
            .filter(|d| d.accept)
            .count() as f64
            / 500.0;
        assert!(accepted >= 0.6, "acceptance {accepted}");
    }

    #[test]
    fn chains_are_deterministic_per_seed() {
        let arch = MlpArchitecture::calibration(2, 1, 3).unwrap();
        let x = array![[0.4, -0.2], [1.0, 0.3], [-0.7, 0.8], [0.2, 0.2]];
        let labels = vec![0usize, 1, 1, 0];
        let cfg = HmcConfig {
            num_samples: 20,
            burn_in: 30,
            thinning: 2,
            seed: 13,
            ..Default::default()
        };
        let a = hmc_sample_on(x.view(), &labels, &arch, &cfg).unwrap();
        let b = hmc_sample_on(x.view(), &labels, &arch, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.diagnostics, b.diagnostics);
        let c = hmc_sample_on(x.view(), &labels, &arch, &HmcConfig { seed: 14, ..cfg }).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn diagnostics_csv_shape() {
        let diag = vec![
            ChainDiag {
                iter: 0,
                accept: true,
                log_post: -1.5,
                energy_error: 0.01,
            },
            ChainDiag {
                iter: 1,
                accept: false,
                log_post: -1.5,
                energy_error: f64::INFINITY,
            },
        ];
        let csv = diagnostics_to_csv(&diag);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iter,accept,log_post,energy_error");
        assert_eq!(lines.next().unwrap(), "0,1,-1.5,0.01");
        assert_eq!(lines.next().unwrap(), "1,0,-1.5,inf");
    }

    #[test]
    fn predict_hmc_matches_oracles() {
        let arch = MlpArchitecture::calibration(2, 1, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let w1 = PointWeights::init(&arch, &mut rng);
        let w2 = PointWeights::init(&arch, &mut rng);
        let x = array![[0.4, -0.2], [1.0, 0.3]];
        // single sample equals the deterministic point prediction
        let single = PosteriorSamples {
            arch,
            samples: vec![w1.clone()],
            acceptance_rate: 1.0,
        };
        assert_eq!(
            predict_hmc_on(&single, x.view()).unwrap(),
            predict_point_on(&w1, x.view()).unwrap()
        );
        // duplication leaves the average unchanged
        let dup = PosteriorSamples {
            arch,
            samples: vec![w1.clone(), w1.clone()],
            acceptance_rate: 1.0,
        };
        for (a, b) in predict_hmc_on(&dup, x.view())
            .unwrap()
            .probs()
            .iter()
            .zip(predict_hmc_on(&single, x.view()).unwrap().probs().iter())
        {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        // loop-and-average oracle
        let both = PosteriorSamples {
            arch,
            samples: vec![w1.clone(), w2.clone()],
            acceptance_rate: 1.0,
        };
        let p = predict_hmc_on(&both, x.view()).unwrap();
        let mut acc = predict_point_on(&w1, x.view()).unwrap().probs().clone();
        acc += predict_point_on(&w2, x.view()).unwrap().probs();
        acc /= 2.0;
        for (a, b) in p.probs().iter().zip(acc.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn step_size_adaptation_moves_toward_target_band() {
        // absurdly large initial step on a narrow Gaussian: acceptance
        // collapses, adaptation must shrink eps during burn-in
        let target = GaussianTarget {
            mean: Array1::zeros(2),
            variance: 0.01,
        };
        let cfg = HmcConfig {
            step_size: 1.0,
            leapfrog_steps: 10,
            num_samples: 200,
            burn_in: 500,
            thinning: 1,
            auto_step_size: true,
            seed: 3,
            ..Default::default()
        };
        let (_, diag, eps) = sample_chain(&target, array![0.5, -0.5], &cfg).unwrap();
        assert!(eps < 1.0, "step size did not shrink: {eps}");
        let post_accept = diag.iter().skip(500).filter(|d| d.accept).count() as f64 / 200.0;
        assert!(post_accept > 0.5, "post-burn-in acceptance {post_accept}");
    }
}
