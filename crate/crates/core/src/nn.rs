//! Fully-connected ReLU networks with a softmax head, plus the manual
//! backward pass used by every trainer in the crate.
//!
//! Weight matrices are stored `(fan_in, fan_out)` so a batch forward is
//! `x.dot(w) + b`. The same [`PointWeights`] container doubles as a gradient
//! holder: a gradient has exactly the shape of the weights it differentiates.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a calibration MLP: `hidden_layers` ReLU layers of
/// `units_per_layer` units between an `input_dim` input and an `output_dim`
/// softmax head. `hidden_layers == 0` is the linear-softmax (logistic) model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub units_per_layer: usize,
    pub output_dim: usize,
}

impl MlpArchitecture {
    pub fn new(
        input_dim: usize,
        hidden_layers: usize,
        units_per_layer: usize,
        output_dim: usize,
    ) -> Result<Self> {
        let arch = Self {
            input_dim,
            hidden_layers,
            units_per_layer,
            output_dim,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// Calibration architecture: logits in, logits out (`input = output = C`).
    pub fn calibration(class_count: usize, hidden_layers: usize, units_per_layer: usize) -> Result<Self> {
        Self::new(class_count, hidden_layers, units_per_layer, class_count)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "architecture needs input_dim >= 1 and output_dim >= 2, got {}x{}",
                self.input_dim, self.output_dim
            )));
        }
        if self.hidden_layers > 0 && self.units_per_layer == 0 {
            return Err(Error::InvalidConfig(
                "hidden layers need at least one unit".into(),
            ));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every dense layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 1);
        let mut prev = self.input_dim;
        for _ in 0..self.hidden_layers {
            dims.push((prev, self.units_per_layer));
            prev = self.units_per_layer;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|&(i, o)| i * o + o).sum()
    }

    /// Table-style label: `0/-`, `1/25`, ...
    pub fn label(&self) -> String {
        if self.hidden_layers == 0 {
            "0/-".to_string()
        } else {
            format!("{}/{}", self.hidden_layers, self.units_per_layer)
        }
    }
}

/// One dense layer: weights `(fan_in, fan_out)` and bias `(fan_out,)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Concrete weights of an MLP; also used as a gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct PointWeights {
    pub layers: Vec<DenseLayer>,
}

impl PointWeights {
    /// All-zero weights for the given shape.
    pub fn zeros(arch: &MlpArchitecture) -> Self {
        let layers = arch
            .layer_dims()
            .into_iter()
            .map(|(i, o)| DenseLayer {
                w: Array2::zeros((i, o)),
                b: Array1::zeros(o),
            })
            .collect();
        Self { layers }
    }

    /// He initialization: zero-mean Gaussian with variance `2 / fan_in` on
    /// weights, zero biases.
    pub fn init<R: Rng + ?Sized>(arch: &MlpArchitecture, rng: &mut R) -> Self {
        let layers = arch
            .layer_dims()
            .into_iter()
            .map(|(i, o)| {
                let scale = (2.0 / i as f64).sqrt();
                let w = Array2::from_shape_simple_fn((i, o), || {
                    scale * rng.sample::<f64, _>(StandardNormal)
                });
                DenseLayer {
                    w,
                    b: Array1::zeros(o),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn matches(&self, arch: &MlpArchitecture) -> bool {
        let dims = arch.layer_dims();
        self.layers.len() == dims.len()
            && self
                .layers
                .iter()
                .zip(&dims)
                .all(|(l, &(i, o))| l.w.dim() == (i, o) && l.b.len() == o)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Row-major flattening, layer by layer, weights before bias.
    pub fn flatten(&self) -> Array1<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.w.iter().copied());
            out.extend(l.b.iter().copied());
        }
        Array1::from(out)
    }

    pub fn from_flat(arch: &MlpArchitecture, flat: ArrayView1<f64>) -> Result<Self> {
        if flat.len() != arch.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "flat vector has {} entries, architecture needs {}",
                flat.len(),
                arch.param_count()
            )));
        }
        let mut layers = Vec::new();
        let mut k = 0;
        for (i, o) in arch.layer_dims() {
            let w = Array2::from_shape_vec((i, o), flat.slice(ndarray::s![k..k + i * o]).to_vec())
                .expect("shape checked");
            k += i * o;
            let b = flat.slice(ndarray::s![k..k + o]).to_owned();
            k += o;
            layers.push(DenseLayer { w, b });
        }
        Ok(Self { layers })
    }

    pub fn squared_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.w.iter().map(|v| v * v).sum::<f64>() + l.b.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// `self += alpha * other`, elementwise over every parameter.
    pub fn scaled_add(&mut self, alpha: f64, other: &PointWeights) {
        for (l, o) in self.layers.iter_mut().zip(&other.layers) {
            l.w.scaled_add(alpha, &o.w);
            l.b.scaled_add(alpha, &o.b);
        }
    }
}

/// Cached activations of one forward pass, consumed by [`backward`].
pub struct ForwardTrace {
    /// `activations[0]` is the input batch; `activations[k]` for `k >= 1` is
    /// the post-ReLU output of hidden layer `k`.
    pub activations: Vec<Array2<f64>>,
    /// Pre-softmax output of the final layer.
    pub logits: Array2<f64>,
}

/// Batch forward pass returning logits only.
pub fn forward(weights: &PointWeights, x: ArrayView2<f64>) -> Array2<f64> {
    forward_trace(weights, x).logits
}

/// Batch forward pass keeping the activations needed for backprop.
pub fn forward_trace(weights: &PointWeights, x: ArrayView2<f64>) -> ForwardTrace {
    let n_layers = weights.layers.len();
    assert_eq!(
        x.ncols(),
        weights.layers[0].w.nrows(),
        "input width does not match first layer fan-in"
    );
    let mut activations = Vec::with_capacity(n_layers);
    activations.push(x.to_owned());
    let mut h = x.to_owned();
    for layer in &weights.layers[..n_layers - 1] {
        let mut a = h.dot(&layer.w);
        a += &layer.b;
        a.mapv_inplace(|v| v.max(0.0));
        activations.push(a.clone());
        h = a;
    }
    let last = &weights.layers[n_layers - 1];
    let mut logits = h.dot(&last.w);
    logits += &last.b;
    ForwardTrace {
        activations,
        logits,
    }
}

/// Backprop of a scalar objective through the network.
///
/// `delta` is the objective's gradient with respect to the logits. Returns
/// the gradient with respect to every weight and bias, plus the gradient
/// with respect to the input batch (used for adversarial perturbations).
pub fn backward(
    weights: &PointWeights,
    trace: &ForwardTrace,
    delta: &Array2<f64>,
) -> (PointWeights, Array2<f64>) {
    let n_layers = weights.layers.len();
    let mut grads: Vec<DenseLayer> = Vec::with_capacity(n_layers);
    let mut d = delta.clone();
    for li in (0..n_layers).rev() {
        let h = &trace.activations[li];
        let gw = h.t().dot(&d);
        let gb = d.sum_axis(Axis(0));
        grads.push(DenseLayer { w: gw, b: gb });
        if li > 0 {
            let mut dh = d.dot(&weights.layers[li].w.t());
            // ReLU mask: post-activation > 0 iff pre-activation > 0.
            dh.zip_mut_with(h, |g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            });
            d = dh;
        } else {
            let dx = d.dot(&weights.layers[0].w.t());
            grads.reverse();
            return (PointWeights { layers: grads }, dx);
        }
    }
    unreachable!("network has at least one layer");
}

/// Numerically stable softmax of a single logit vector.
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "softmax input contains non-finite value {bad}"
        )));
    }
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    for v in &mut e {
        *v /= s;
    }
    Ok(e)
}

/// Row-wise stable log-softmax.
pub fn log_softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = row.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m;
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// Row-wise stable softmax.
pub fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

/// Sum over rows of `log p(label | row)` given row-wise log-probabilities.
pub fn log_lik_sum(logprobs: &Array2<f64>, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &t)| logprobs[(i, t)])
        .sum()
}

/// Gradient of the *summed* log-likelihood with respect to the logits:
/// `onehot - softmax` per row. Divide by the batch size for the mean.
pub fn grad_loglik_sum_logits(logprobs: &Array2<f64>, labels: &[usize]) -> Array2<f64> {
    let mut delta = logprobs.mapv(|lp| -lp.exp());
    for (i, &t) in labels.iter().enumerate() {
        delta[(i, t)] += 1.0;
    }
    delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arch_2class() -> MlpArchitecture {
        MlpArchitecture::new(3, 1, 4, 2).unwrap()
    }

    #[test]
    fn softmax_uniform_for_equal_logits() {
        let p = softmax(&[0.3; 5]).unwrap();
        for v in p {
            assert_abs_diff_eq!(v, 0.2, epsilon = 1e-15);
        }
    }

    #[test]
    fn softmax_shift_invariant() {
        let a = softmax(&[0.1, -2.0, 3.4]).unwrap();
        let b = softmax(&[100.1, 98.0, 103.4]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn softmax_extreme_logits_do_not_overflow() {
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!(p[0] > 1.0 - 1e-12 && p[0].is_finite());
        assert!(p[1] < 1e-12);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(softmax(&[1.0, f64::NAN]).is_err());
        assert!(softmax(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn flatten_roundtrip() {
        let arch = arch_2class();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = PointWeights::init(&arch, &mut rng);
        let back = PointWeights::from_flat(&arch, w.flatten().view()).unwrap();
        assert_eq!(w, back);
        assert_eq!(w.param_count(), arch.param_count());
    }

    #[test]
    fn forward_matches_hand_unrolled() {
        let arch = arch_2class();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = PointWeights::init(&arch, &mut rng);
        let x = ndarray::array![[0.5, -1.0, 2.0], [1.5, 0.0, -0.3]];
        let logits = forward(&w, x.view());
        for r in 0..2 {
            // hidden layer by hand
            let mut h = vec![0.0; 4];
            for j in 0..4 {
                let mut a = w.layers[0].b[j];
                for i in 0..3 {
                    a += x[(r, i)] * w.layers[0].w[(i, j)];
                }
                h[j] = a.max(0.0);
            }
            for c in 0..2 {
                let mut z = w.layers[1].b[c];
                for j in 0..4 {
                    z += h[j] * w.layers[1].w[(j, c)];
                }
                assert_abs_diff_eq!(logits[(r, c)], z, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let arch = arch_2class();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = PointWeights::init(&arch, &mut rng);
        let x = ndarray::array![[0.5, -1.0, 2.0], [1.5, 0.2, -0.3], [-0.7, 0.9, 0.1]];
        let labels = [0usize, 1, 0];

        let loss = |wt: &PointWeights| -> f64 {
            let lp = log_softmax_rows(&forward(wt, x.view()));
            -log_lik_sum(&lp, &labels) / labels.len() as f64
        };

        let trace = forward_trace(&w, x.view());
        let lp = log_softmax_rows(&trace.logits);
        let mut delta = grad_loglik_sum_logits(&lp, &labels);
        delta.mapv_inplace(|v| -v / labels.len() as f64);
        let (g, _) = backward(&w, &trace, &delta);

        let flat = w.flatten();
        let gflat = g.flatten();
        let h = 1e-5;
        for k in 0..flat.len() {
            let mut up = flat.clone();
            up[k] += h;
            let mut dn = flat.clone();
            dn[k] -= h;
            let fd = (loss(&PointWeights::from_flat(&arch, up.view()).unwrap())
                - loss(&PointWeights::from_flat(&arch, dn.view()).unwrap()))
                / (2.0 * h);
            let denom = fd.abs().max(gflat[k].abs()).max(1e-8);
            assert!(
                ((gflat[k] - fd) / denom).abs() < 1e-4,
                "param {k}: analytic {} vs fd {fd}",
                gflat[k]
            );
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let arch = arch_2class();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = PointWeights::init(&arch, &mut rng);
        let x = ndarray::array![[0.5, -1.0, 2.0]];
        let labels = [1usize];

        let loss_at = |x: &Array2<f64>| -> f64 {
            let lp = log_softmax_rows(&forward(&w, x.view()));
            -log_lik_sum(&lp, &labels)
        };

        let trace = forward_trace(&w, x.view());
        let lp = log_softmax_rows(&trace.logits);
        let mut delta = grad_loglik_sum_logits(&lp, &labels);
        delta.mapv_inplace(|v| -v);
        let (_, dx) = backward(&w, &trace, &delta);

        let h = 1e-6;
        for i in 0..3 {
            let mut up = x.clone();
            up[(0, i)] += h;
            let mut dn = x.clone();
            dn[(0, i)] -= h;
            let fd = (loss_at(&up) - loss_at(&dn)) / (2.0 * h);
            assert_abs_diff_eq!(dx[(0, i)], fd, epsilon = 1e-5);
        }
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let arch = MlpArchitecture::new(4, 2, 8, 4).unwrap();
        let w = PointWeights::zeros(&arch);
        let x = ndarray::array![[3.0, -1.0, 0.5, 2.2]];
        let p = softmax_rows(&forward(&w, x.view()));
        for c in 0..4 {
            assert_abs_diff_eq!(p[(0, c)], 0.25, epsilon = 1e-15);
        }
    }
}
