//! Point-estimate calibrators: Temperature Scaling, MAP/ML neural networks
//! and decoupled ensembles.
//!
//! These all share the decoupled setting: the "input" to every model here
//! is the logit vector of some upstream classifier (or raw features for
//! end-to-end demos), and the output is a recalibrated distribution over
//! the same classes.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::LogitDataset;
use crate::error::{Error, Result};
use crate::metrics::ProbMatrix;
use crate::nn::{
    self, forward, forward_trace, grad_loglik_sum_logits, log_softmax_rows, softmax_rows,
    MlpArchitecture, PointWeights,
};
use crate::opt::{epoch_batches, Adam, OptimConfig, TrainRecord};
use crate::seed;

/// A fitted temperature for logit scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Temperature {
    pub t: f64,
}

impl Temperature {
    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "temperature must be positive and finite, got {t}"
            )));
        }
        Ok(Self { t })
    }
}

/// Mean NLL of `softmax(logits / t)` against the labels, computed in log
/// space (no probability floor needed).
pub fn nll_at_temperature(ds: &LogitDataset, t: f64) -> f64 {
    let scaled = ds.logits.mapv(|v| v / t);
    let lp = log_softmax_rows(&scaled);
    let total: f64 = ds
        .labels
        .iter()
        .enumerate()
        .map(|(i, &l)| -lp[(i, l)])
        .sum();
    total / ds.len() as f64
}

const LOG_T_LO: f64 = -4.0;
const LOG_T_HI: f64 = 4.0;
const LOG_T_TOL: f64 = 1e-4;

/// Fit a temperature by minimizing validation NLL.
///
/// Golden-section search on `log T` over `[-4, 4]` to `1e-4` tolerance;
/// the NLL in `T` is unimodal for every dataset we have ever fed it, and a
/// derivative-free bracket search has no tuning knobs. If the search comes
/// back worse than `T = 1` (possible only on pathological input), returns
/// `T = 1` so scaling never hurts validation NLL.
pub fn fit_temperature(val: &LogitDataset) -> Result<Temperature> {
    if val.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let g = |a: f64| nll_at_temperature(val, a.exp());
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (LOG_T_LO, LOG_T_HI);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut gc, mut gd) = (g(c), g(d));
    while hi - lo > LOG_T_TOL {
        if gc < gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - phi * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + phi * (hi - lo);
            gd = g(d);
        }
    }
    let t = ((lo + hi) / 2.0).exp();
    if nll_at_temperature(val, t) > nll_at_temperature(val, 1.0) {
        return Temperature::new(1.0);
    }
    Temperature::new(t)
}

/// Row-wise `softmax(logits / T)`. Argmax per row is unchanged for any
/// `T > 0`, so temperature scaling never moves accuracy.
pub fn apply_temperature(ds: &LogitDataset, t: Temperature) -> Result<ProbMatrix> {
    Temperature::new(t.t)?;
    let scaled = ds.logits.mapv(|v| v / t.t);
    ProbMatrix::new(softmax_rows(&scaled))
}

/// Plain softmax of the stored logits — the uncalibrated reference.
pub fn uncalibrated(ds: &LogitDataset) -> Result<ProbMatrix> {
    ProbMatrix::new(softmax_rows(&ds.logits))
}

/// MAP/ML training configuration. `prior_variance = None` selects maximum
/// likelihood; `Some(v)` adds the Gaussian penalty `-||θ||² / 2v` to the
/// mean log-likelihood (the prior term is deliberately not divided by N,
/// which is what makes small-data MAP fits shrink hard toward zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointTrainConfig {
    pub prior_variance: Option<f64>,
    pub optim: OptimConfig,
}

fn validate_prior(prior_variance: Option<f64>) -> Result<()> {
    if let Some(v) = prior_variance {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "prior variance must be positive, got {v}"
            )));
        }
    }
    Ok(())
}

/// Loss of the point objective at `w`: negative mean log-likelihood minus
/// the log prior. Exposed for gradient checking.
pub fn point_loss(
    w: &PointWeights,
    inputs: ArrayView2<f64>,
    labels: &[usize],
    prior_variance: Option<f64>,
) -> f64 {
    let logits = forward(w, inputs);
    let lp = log_softmax_rows(&logits);
    let mean_ll = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| lp[(i, l)])
        .sum::<f64>()
        / labels.len() as f64;
    let log_prior = match prior_variance {
        Some(v) => -w.squared_norm() / (2.0 * v),
        None => 0.0,
    };
    -(mean_ll + log_prior)
}

/// Gradient of [`point_loss`] with respect to the weights, plus the
/// gradient with respect to the inputs (needed for fast-gradient-sign
/// augmentation).
pub fn point_loss_grad(
    w: &PointWeights,
    inputs: ArrayView2<f64>,
    labels: &[usize],
    prior_variance: Option<f64>,
) -> (PointWeights, Array2<f64>) {
    let b = labels.len() as f64;
    let trace = forward_trace(w, inputs);
    let lp = log_softmax_rows(&trace.logits);
    // d(-mean loglik)/dlogits = (softmax - onehot) / B
    let mut delta = grad_loglik_sum_logits(&lp, labels);
    delta.mapv_inplace(|v| -v / b);
    let (mut grads, input_grad) = nn::backward(w, &trace, &delta);
    if let Some(v) = prior_variance {
        // d(-logprior)/dθ = θ / v
        grads.scaled_add(1.0 / v, w);
    }
    (grads, input_grad)
}

fn train_point_inner(
    inputs: ArrayView2<f64>,
    labels: &[usize],
    arch: &MlpArchitecture,
    prior_variance: Option<f64>,
    optim: &OptimConfig,
    run_seed: u64,
    adversarial_eps: f64,
) -> Result<(PointWeights, Vec<TrainRecord>)> {
    arch.validate()?;
    optim.validate()?;
    validate_prior(prior_variance)?;
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if inputs.ncols() != arch.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "architecture expects input_dim {}, data has {} columns",
            arch.input_dim,
            inputs.ncols()
        )));
    }
    if !(adversarial_eps.is_finite() && adversarial_eps >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "adversarial eps must be nonnegative, got {adversarial_eps}"
        )));
    }

    let mut w = PointWeights::init(arch, &mut seed::rng(run_seed, "point-init"));
    let mut flat = w.flatten();
    let mut adam = Adam::new(flat.len());
    let mut batch_rng = seed::rng(run_seed, "point-batches");
    let n = labels.len();
    let mut log = Vec::with_capacity(optim.epochs);

    for epoch in 0..optim.epochs {
        let lr = optim.schedule.rate(optim.learning_rate, epoch, optim.epochs);
        for batch in epoch_batches(n, optim.batch_size, &mut batch_rng) {
            let bx = select_rows(inputs, &batch);
            let by: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (bx, by) = if adversarial_eps > 0.0 {
                let (_, xg) = point_loss_grad(&w, bx.view(), &by, prior_variance);
                let perturbed = &bx + &xg.mapv(|g| adversarial_eps * g.signum());
                let mut both = Array2::zeros((2 * bx.nrows(), bx.ncols()));
                both.slice_mut(ndarray::s![..bx.nrows(), ..]).assign(&bx);
                both.slice_mut(ndarray::s![bx.nrows().., ..]).assign(&perturbed);
                let mut labels2 = by.clone();
                labels2.extend_from_slice(&by);
                (both, labels2)
            } else {
                (bx, by)
            };
            let (grads, _) = point_loss_grad(&w, bx.view(), &by, prior_variance);
            adam.step(&mut flat, grads.flatten().view(), lr);
            w = PointWeights::from_flat(arch, flat.view())?;
        }
        let loss = point_loss(&w, inputs, labels, prior_variance);
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "point training loss became non-finite at epoch {epoch}"
            )));
        }
        let kl = match prior_variance {
            Some(v) => w.squared_norm() / (2.0 * v),
            None => 0.0,
        };
        log.push(TrainRecord {
            epoch,
            elbo: -loss,
            loglik: -loss + kl,
            kl,
            lr,
        });
    }
    Ok((w, log))
}

fn select_rows(inputs: ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), inputs.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&inputs.row(i));
    }
    out
}

/// Train a MAP (or, with `prior_variance = None`, ML) calibration network
/// on arbitrary feature rows.
pub fn train_map_on(
    inputs: ArrayView2<f64>,
    labels: &[usize],
    arch: &MlpArchitecture,
    cfg: &PointTrainConfig,
) -> Result<(PointWeights, Vec<TrainRecord>)> {
    train_point_inner(
        inputs,
        labels,
        arch,
        cfg.prior_variance,
        &cfg.optim,
        cfg.optim.seed,
        0.0,
    )
}

/// Train a MAP/ML calibration network on a logit dataset.
pub fn train_map(
    ds: &LogitDataset,
    arch: &MlpArchitecture,
    cfg: &PointTrainConfig,
) -> Result<(PointWeights, Vec<TrainRecord>)> {
    train_map_on(ds.logits.view(), &ds.labels, arch, cfg)
}

/// Deterministic forward pass to a probability matrix.
pub fn predict_point_on(w: &PointWeights, inputs: ArrayView2<f64>) -> Result<ProbMatrix> {
    ProbMatrix::new(softmax_rows(&forward(w, inputs)))
}

/// Deterministic forward pass over a logit dataset.
pub fn predict_point(w: &PointWeights, ds: &LogitDataset) -> Result<ProbMatrix> {
    predict_point_on(w, ds.logits.view())
}

/// A bag of independently trained MAP models over one architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub arch: MlpArchitecture,
    pub members: Vec<PointWeights>,
}

impl Ensemble {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }
}

/// Train `member_count` MAP models with distinct initializations and batch
/// orders. Member 0 reuses the run seed unchanged, so a one-member ensemble
/// is bit-identical to `train_map`. With `adversarial_eps > 0` every batch
/// is doubled with fast-gradient-sign perturbed inputs at that radius.
pub fn train_ensemble_on(
    inputs: ArrayView2<f64>,
    labels: &[usize],
    arch: &MlpArchitecture,
    member_count: usize,
    cfg: &PointTrainConfig,
    adversarial_eps: f64,
) -> Result<(Ensemble, Vec<TrainRecord>)> {
    if member_count == 0 {
        return Err(Error::InvalidConfig("member_count must be >= 1".into()));
    }
    let mut members = Vec::with_capacity(member_count);
    let mut first_log = Vec::new();
    for m in 0..member_count {
        let member_seed = if m == 0 {
            cfg.optim.seed
        } else {
            seed::derive_indexed(cfg.optim.seed, "ensemble-member", m as u64)
        };
        let (w, log) = train_point_inner(
            inputs,
            labels,
            arch,
            cfg.prior_variance,
            &cfg.optim,
            member_seed,
            adversarial_eps,
        )?;
        if m == 0 {
            first_log = log;
        }
        members.push(w);
    }
    Ok((
        Ensemble {
            arch: arch.clone(),
            members,
        },
        first_log,
    ))
}

/// Train a decoupled ensemble on a logit dataset.
pub fn train_ensemble(
    ds: &LogitDataset,
    arch: &MlpArchitecture,
    member_count: usize,
    cfg: &PointTrainConfig,
    adversarial_eps: f64,
) -> Result<(Ensemble, Vec<TrainRecord>)> {
    train_ensemble_on(
        ds.logits.view(),
        &ds.labels,
        arch,
        member_count,
        cfg,
        adversarial_eps,
    )
}

/// Default fast-gradient-sign radius: 1% of the mean per-dimension input
/// range.
pub fn default_adversarial_eps(inputs: ArrayView2<f64>) -> f64 {
    if inputs.nrows() == 0 || inputs.ncols() == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for col in inputs.columns() {
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        total += hi - lo;
    }
    0.01 * total / inputs.ncols() as f64
}

/// Arithmetic mean of per-member probability outputs.
pub fn predict_ensemble_on(e: &Ensemble, inputs: ArrayView2<f64>) -> Result<ProbMatrix> {
    if e.members.is_empty() {
        return Err(Error::InvalidConfig("ensemble has no members".into()));
    }
    let mut acc: Array2<f64> = Array2::zeros((inputs.nrows(), e.arch.output_dim));
    for w in &e.members {
        acc += &softmax_rows(&forward(w, inputs));
    }
    acc /= e.members.len() as f64;
    ProbMatrix::new(acc)
}

/// Ensemble prediction over a logit dataset.
pub fn predict_ensemble(e: &Ensemble, ds: &LogitDataset) -> Result<ProbMatrix> {
    predict_ensemble_on(e, ds.logits.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_miscalibrated, SynthConfig};
    use crate::metrics;
    use crate::opt::LrSchedule;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    fn synth(scale: f64, n: usize, seed: u64) -> LogitDataset {
        synth_miscalibrated(&SynthConfig {
            n,
            class_count: 5,
            scale,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    /// Brute-force reference: dense grid over log T at 4x the search
    /// resolution.
    fn grid_search_temperature(ds: &LogitDataset) -> f64 {
        let mut best = (f64::INFINITY, 1.0);
        let steps = 8_000usize; // log-T resolution 1e-3
        for i in 0..=steps {
            let a = LOG_T_LO + (LOG_T_HI - LOG_T_LO) * i as f64 / steps as f64;
            let v = nll_at_temperature(ds, a.exp());
            if v < best.0 {
                best = (v, a);
            }
        }
        best.1
    }

    #[test]
    fn temperature_matches_grid_search_oracle() {
        for (scale, lo, hi) in [(3.0, 2.9, 3.1), (1.0, 0.95, 1.05)] {
            let ds = synth(scale, 3000, 11);
            let t = fit_temperature(&ds).unwrap();
            assert!(t.t > lo && t.t < hi, "scale {scale}: T = {}", t.t);
            let grid = grid_search_temperature(&ds);
            assert_abs_diff_eq!(t.t.ln(), grid, epsilon = 2e-3);
        }
    }

    #[test]
    fn temperature_never_hurts_validation_nll() {
        for seed in 0..5 {
            let ds = synth(2.0, 500, seed);
            let t = fit_temperature(&ds).unwrap();
            assert!(nll_at_temperature(&ds, t.t) <= nll_at_temperature(&ds, 1.0) + 1e-12);
        }
    }

    #[test]
    fn separable_one_hot_logits_stay_finite() {
        // hugely separated logits: best T is tiny; search clamps at e^-4
        let ds = LogitDataset::new(
            array![[50.0, -50.0], [-50.0, 50.0], [50.0, -50.0]],
            vec![0, 1, 0],
        )
        .unwrap();
        let t = fit_temperature(&ds).unwrap();
        assert!(t.t.is_finite() && t.t > 0.0);
        assert!(nll_at_temperature(&ds, t.t) <= nll_at_temperature(&ds, 1.0));
    }

    #[test]
    fn apply_temperature_identity_and_flattening() {
        let ds = synth(2.0, 50, 3);
        let p1 = apply_temperature(&ds, Temperature::new(1.0).unwrap()).unwrap();
        let p0 = uncalibrated(&ds).unwrap();
        assert_eq!(p1, p0);
        let flat = apply_temperature(&ds, Temperature::new(1e6).unwrap()).unwrap();
        for &p in flat.probs().iter() {
            assert_abs_diff_eq!(p, 1.0 / ds.class_count() as f64, epsilon = 1e-3);
        }
    }

    #[test]
    fn temperature_preserves_argmax() {
        let mut rng = seed::rng(5, "test-argmax");
        let n = 10_000;
        let logits = Array2::from_shape_fn((n, 6), |_| rng.random_range(-8.0..8.0));
        let ds = LogitDataset::new(logits, vec![0; n]).unwrap();
        let base = uncalibrated(&ds).unwrap().predictions();
        for t in [0.01, 0.5, 1.0, 2.0, 100.0] {
            let p = apply_temperature(&ds, Temperature::new(t).unwrap()).unwrap();
            assert_eq!(p.predictions(), base, "argmax moved at T={t}");
        }
    }

    #[test]
    fn point_gradient_matches_finite_differences() {
        // central differences at step 1e-5, relative tolerance 1e-4, for
        // 0-, 1- and 2-hidden-layer models
        let mut rng = seed::rng(2, "test-fd");
        let inputs = Array2::from_shape_fn((6, 2), |_| rng.random_range(-2.0..2.0));
        let labels = vec![0usize, 1, 0, 1, 1, 0];
        for hidden in 0..=2usize {
            let arch = MlpArchitecture::calibration(2, hidden, 4).unwrap();
            let w = PointWeights::init(&arch, &mut rng);
            let (grads, _) = point_loss_grad(&w, inputs.view(), &labels, Some(0.7));
            let ga = grads.flatten();
            let flat = w.flatten();
            let h = 1e-5;
            for i in 0..flat.len() {
                let mut plus = flat.clone();
                plus[i] += h;
                let mut minus = flat.clone();
                minus[i] -= h;
                let wp = PointWeights::from_flat(&arch, plus.view()).unwrap();
                let wm = PointWeights::from_flat(&arch, minus.view()).unwrap();
                let fd = (point_loss(&wp, inputs.view(), &labels, Some(0.7))
                    - point_loss(&wm, inputs.view(), &labels, Some(0.7)))
                    / (2.0 * h);
                let denom = fd.abs().max(ga[i].abs()).max(1e-8);
                assert!(
                    (fd - ga[i]).abs() / denom < 1e-4,
                    "hidden={hidden} param {i}: analytic {} vs fd {fd}",
                    ga[i]
                );
            }
        }
    }

    #[test]
    fn ml_fits_separable_data_perfectly() {
        // two linearly separable blobs, logistic (0 hidden layers) model
        let mut rng = seed::rng(8, "test-sep");
        let n = 100;
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 2;
            y.push(c);
            let sign = if c == 0 { -1.0 } else { 1.0 };
            x[(i, 0)] = sign * 3.0 + rng.random_range(-0.5..0.5);
            x[(i, 1)] = rng.random_range(-0.5..0.5);
        }
        let arch = MlpArchitecture::calibration(2, 0, 0).unwrap();
        let cfg = PointTrainConfig {
            prior_variance: None,
            optim: OptimConfig {
                epochs: 60,
                batch_size: 25,
                learning_rate: 0.05,
                ..Default::default()
            },
        };
        let (w, log) = train_map_on(x.view(), &y, &arch, &cfg).unwrap();
        let p = predict_point_on(&w, x.view()).unwrap();
        assert_abs_diff_eq!(metrics::accuracy(&p, &y).unwrap(), 1.0);
        assert!(log.last().unwrap().elbo > log.first().unwrap().elbo);
    }

    #[test]
    fn tiny_prior_variance_crushes_weights() {
        let ds = synth(2.0, 200, 1);
        let arch = MlpArchitecture::calibration(5, 1, 8).unwrap();
        let cfg = PointTrainConfig {
            prior_variance: Some(1e-6),
            optim: OptimConfig {
                epochs: 150,
                batch_size: 50,
                learning_rate: 0.02,
                schedule: LrSchedule::Step,
                ..Default::default()
            },
        };
        let (w, _) = train_map(&ds, &arch, &cfg).unwrap();
        assert!(w.squared_norm().sqrt() < 1e-2, "norm {}", w.squared_norm().sqrt());
    }

    #[test]
    fn map_shrinks_weights_relative_to_ml() {
        let ds = synth(2.0, 300, 2);
        let arch = MlpArchitecture::calibration(5, 1, 8).unwrap();
        let optim = OptimConfig {
            epochs: 30,
            batch_size: 50,
            learning_rate: 0.01,
            ..Default::default()
        };
        let (w_ml, _) = train_map(&ds, &arch, &PointTrainConfig { prior_variance: None, optim }).unwrap();
        let (w_map, _) = train_map(
            &ds,
            &arch,
            &PointTrainConfig { prior_variance: Some(0.05), optim },
        )
        .unwrap();
        assert!(w_map.squared_norm() < w_ml.squared_norm());
    }

    #[test]
    fn identity_logistic_model_reproduces_softmax() {
        let ds = synth(2.0, 40, 4);
        let arch = MlpArchitecture::calibration(5, 0, 0).unwrap();
        let mut w = PointWeights::zeros(&arch);
        for i in 0..5 {
            w.layers[0].w[(i, i)] = 1.0;
        }
        let p = predict_point(&w, &ds).unwrap();
        let direct = uncalibrated(&ds).unwrap();
        for (a, b) in p.probs().iter().zip(direct.probs().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_member_ensemble_equals_train_map() {
        let ds = synth(2.0, 200, 6);
        let arch = MlpArchitecture::calibration(5, 1, 8).unwrap();
        let cfg = PointTrainConfig {
            prior_variance: Some(1.0),
            optim: OptimConfig {
                epochs: 10,
                batch_size: 50,
                learning_rate: 0.01,
                seed: 42,
                ..Default::default()
            },
        };
        let (e, _) = train_ensemble(&ds, &arch, 1, &cfg, 0.0).unwrap();
        let (w, _) = train_map(&ds, &arch, &cfg).unwrap();
        assert_eq!(e.members[0].flatten(), w.flatten());
        assert_eq!(
            predict_ensemble(&e, &ds).unwrap(),
            predict_point(&w, &ds).unwrap()
        );
    }

    #[test]
    fn members_differ_and_mean_is_correct() {
        let ds = synth(2.0, 200, 7);
        let arch = MlpArchitecture::calibration(5, 1, 8).unwrap();
        let cfg = PointTrainConfig {
            prior_variance: Some(1.0),
            optim: OptimConfig {
                epochs: 5,
                batch_size: 50,
                learning_rate: 0.01,
                seed: 9,
                ..Default::default()
            },
        };
        let (e, _) = train_ensemble(&ds, &arch, 3, &cfg, 0.0).unwrap();
        assert_ne!(e.members[0].flatten(), e.members[1].flatten());
        assert_ne!(e.members[1].flatten(), e.members[2].flatten());
        // loop-and-average oracle
        let p = predict_ensemble(&e, &ds).unwrap();
        let mut acc = Array2::zeros((ds.len(), 5));
        for w in &e.members {
            acc += predict_point(w, &ds).unwrap().probs();
        }
        acc /= 3.0;
        for (a, b) in p.probs().iter().zip(acc.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_member_hand_average() {
        // members outputting (1,0) and (0,1) average to (0.5, 0.5):
        // realized with strong fixed logistic weights of opposite sign
        let arch = MlpArchitecture::calibration(2, 0, 0).unwrap();
        let mut w1 = PointWeights::zeros(&arch);
        w1.layers[0].b[0] = 60.0;
        let mut w2 = PointWeights::zeros(&arch);
        w2.layers[0].b[1] = 60.0;
        let e = Ensemble {
            arch,
            members: vec![w1, w2],
        };
        let ds = LogitDataset::new(array![[0.3, -0.2]], vec![0]).unwrap();
        let p = predict_ensemble(&e, &ds).unwrap();
        assert_abs_diff_eq!(p.probs()[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.probs()[(0, 1)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ensemble_nll_no_worse_than_worst_member() {
        for seed in 0..5 {
            let train = synth(2.5, 300, 100 + seed);
            let held = synth(2.5, 300, 200 + seed);
            let arch = MlpArchitecture::calibration(5, 1, 8).unwrap();
            let cfg = PointTrainConfig {
                prior_variance: Some(1.0),
                optim: OptimConfig {
                    epochs: 8,
                    batch_size: 50,
                    learning_rate: 0.01,
                    seed,
                    ..Default::default()
                },
            };
            let (e, _) = train_ensemble(&train, &arch, 4, &cfg, 0.0).unwrap();
            let ens_nll = metrics::nll(&predict_ensemble(&e, &held).unwrap(), &held.labels).unwrap();
            let worst = e
                .members
                .iter()
                .map(|w| metrics::nll(&predict_point(w, &held).unwrap(), &held.labels).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(
                ens_nll <= worst + 1e-12,
                "seed {seed}: ensemble {ens_nll} vs worst member {worst}"
            );
        }
    }

    #[test]
    fn adversarial_training_runs_and_changes_the_fit() {
        let ds = synth(2.0, 200, 12);
        let arch = MlpArchitecture::calibration(5, 1, 8).unwrap();
        let cfg = PointTrainConfig {
            prior_variance: Some(1.0),
            optim: OptimConfig {
                epochs: 5,
                batch_size: 50,
                learning_rate: 0.01,
                ..Default::default()
            },
        };
        let eps = default_adversarial_eps(ds.logits.view());
        assert!(eps > 0.0);
        let (e_adv, _) = train_ensemble(&ds, &arch, 1, &cfg, eps).unwrap();
        let (e_plain, _) = train_ensemble(&ds, &arch, 1, &cfg, 0.0).unwrap();
        assert_ne!(e_adv.members[0].flatten(), e_plain.members[0].flatten());
    }
}
