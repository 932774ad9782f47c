//! Command handlers: train, eval, compare, gen.

use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::ArrayView2;
use serde::Serialize;

use decal_core::baselines::{
    self, default_adversarial_eps, fit_temperature, predict_ensemble_on, predict_point_on,
    PointTrainConfig,
};
use decal_core::bnn::{
    predict_bnn_on, select_k_on, train_bnn_on, BnnTrainConfig, Estimator, KSelection,
    PredictiveConfig,
};
use decal_core::data::io::dataset_to_csv;
use decal_core::data::{synth_miscalibrated, SplitFractions, SynthConfig};
use decal_core::hmc::{diagnostics_to_csv, hmc_sample_on, predict_hmc_on, ChainDiag, HmcConfig};
use decal_core::metrics::{reliability_bins, CalibrationMetrics, MetricsReport, ProbMatrix};
use decal_core::model::Model;
use decal_core::nn::{softmax_rows, MlpArchitecture};
use decal_core::opt::{train_log_to_csv, OptimConfig, TrainRecord};
use decal_core::{seed, Error, Result};

use crate::source::{resolve, Resolved};
use crate::{
    parse_hidden, parse_k_grid, CompareArgs, EvalArgs, GenArgs, HyperArgs, Method, TrainArgs,
};

/// Hyperparameters after flag parsing and per-command defaulting.
pub struct Hyper {
    pub seed: u64,
    pub beta: f64,
    pub elbo_samples: usize,
    pub hidden: (usize, usize),
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub schedule: decal_core::opt::LrSchedule,
    pub k_grid: Vec<usize>,
    pub prior_variance: f64,
    pub members: usize,
    pub adv_eps: Option<f64>,
    pub hmc_burnin: usize,
    pub hmc_samples: usize,
    pub hmc_thinning: usize,
    pub hmc_leapfrog_steps: usize,
    pub hmc_step_size: f64,
}

impl Hyper {
    pub fn from_args(h: &HyperArgs, default_epochs: usize, default_lr: f64) -> Result<Self> {
        Ok(Self {
            seed: h.seed,
            beta: h.beta,
            elbo_samples: h.elbo_samples,
            hidden: parse_hidden(&h.hidden)?,
            epochs: h.epochs.unwrap_or(default_epochs),
            batch_size: h.batch_size,
            lr: h.lr.unwrap_or(default_lr),
            schedule: h.lr_schedule,
            k_grid: parse_k_grid(&h.k_grid)?,
            prior_variance: h.prior_variance,
            members: h.members,
            adv_eps: h.adv_eps,
            hmc_burnin: h.hmc_burnin,
            hmc_samples: h.hmc_samples,
            hmc_thinning: h.hmc_thinning,
            hmc_leapfrog_steps: h.hmc_leapfrog_steps,
            hmc_step_size: h.hmc_step_size,
        })
    }

    pub fn optim(&self) -> OptimConfig {
        OptimConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            schedule: self.schedule,
            seed: self.seed,
        }
    }

    pub fn arch(&self, input_dim: usize, class_count: usize) -> Result<MlpArchitecture> {
        MlpArchitecture::new(input_dim, self.hidden.0, self.hidden.1, class_count)
    }

    /// `--prior-variance 0` means "no prior" for point models.
    pub fn point_prior(&self) -> Result<Option<f64>> {
        if self.prior_variance == 0.0 {
            Ok(None)
        } else if self.prior_variance.is_finite() && self.prior_variance > 0.0 {
            Ok(Some(self.prior_variance))
        } else {
            Err(Error::InvalidConfig(format!(
                "prior variance must be >= 0, got {}",
                self.prior_variance
            )))
        }
    }

    pub fn hmc_config(&self, prior_variance: f64, seed_value: u64) -> HmcConfig {
        HmcConfig {
            step_size: self.hmc_step_size,
            leapfrog_steps: self.hmc_leapfrog_steps,
            num_samples: self.hmc_samples,
            burn_in: self.hmc_burnin,
            thinning: self.hmc_thinning,
            prior_variance,
            seed: seed_value,
            auto_step_size: true,
        }
    }
}

/// Everything a single training run produces.
pub struct TrainOutput {
    pub model: Option<Model>,
    pub log: Vec<TrainRecord>,
    pub chain: Vec<ChainDiag>,
    pub degraded: bool,
    pub low_acceptance: Option<bool>,
    pub temperature: Option<f64>,
    pub k_selection: Option<KSelection>,
    pub adversarial_eps: Option<f64>,
}

impl TrainOutput {
    fn with_model(model: Model) -> Self {
        Self {
            model: Some(model),
            log: Vec::new(),
            chain: Vec::new(),
            degraded: false,
            low_acceptance: None,
            temperature: None,
            k_selection: None,
            adversarial_eps: None,
        }
    }
}

/// Train `method` on the resolved train split. K selection for BNN methods
/// runs on the val split when the source has one; otherwise the model keeps
/// no K and `eval` must be given `--k`.
pub fn train_method(
    method: Method,
    data: &Resolved,
    hyper: &Hyper,
    bins: usize,
) -> Result<TrainOutput> {
    let train = &data.train;
    match method {
        Method::Uncalibrated => Err(Error::InvalidConfig(
            "uncalibrated has no parameters to train; use eval or compare".into(),
        )),
        Method::Ts => {
            require_logit_inputs(method, data)?;
            let t = fit_temperature(&train.as_logit_dataset()?)?;
            let mut out = TrainOutput::with_model(Model::Temperature(t));
            out.temperature = Some(t.t);
            Ok(out)
        }
        Method::Map => {
            let arch = hyper.arch(data.input_dim(), data.class_count)?;
            let cfg = PointTrainConfig {
                prior_variance: hyper.point_prior()?,
                optim: hyper.optim(),
            };
            let (weights, log) = baselines::train_map_on(train.x.view(), &train.y, &arch, &cfg)?;
            let mut out = TrainOutput::with_model(Model::Point { arch, weights });
            out.log = log;
            Ok(out)
        }
        Method::Ensemble => {
            let arch = hyper.arch(data.input_dim(), data.class_count)?;
            let cfg = PointTrainConfig {
                prior_variance: hyper.point_prior()?,
                optim: hyper.optim(),
            };
            let eps = match hyper.adv_eps {
                Some(e) => e,
                None => default_adversarial_eps(train.x.view()),
            };
            let (ensemble, log) = baselines::train_ensemble_on(
                train.x.view(),
                &train.y,
                &arch,
                hyper.members,
                &cfg,
                eps,
            )?;
            let mut out = TrainOutput::with_model(Model::Ensemble(ensemble));
            out.log = log;
            out.adversarial_eps = Some(eps);
            Ok(out)
        }
        Method::BnnMfvi | Method::BnnMfvilr => {
            let estimator = if method == Method::BnnMfvi {
                Estimator::Mfvi
            } else {
                Estimator::Mfvilr
            };
            let cfg = BnnTrainConfig {
                arch: hyper.arch(data.input_dim(), data.class_count)?,
                beta: hyper.beta,
                elbo_samples: hyper.elbo_samples,
                estimator,
                prior_variance: hyper.prior_variance,
                optim: hyper.optim(),
            };
            let trained = train_bnn_on(train.x.view(), &train.y, &cfg)?;
            let k_selection = match &data.val {
                Some(val) => Some(select_k_on(
                    &trained.vp,
                    val.x.view(),
                    &val.y,
                    &hyper.k_grid,
                    seed::derive(hyper.seed, "k-select"),
                    bins,
                )?),
                None => None,
            };
            let mut out = TrainOutput::with_model(Model::Bnn {
                vp: trained.vp,
                train_config: cfg,
                selected_k: k_selection.as_ref().map(|s| s.k_star),
            });
            out.log = trained.log;
            out.degraded = trained.degraded;
            out.k_selection = k_selection;
            Ok(out)
        }
        Method::Hmc => {
            let arch = hyper.arch(data.input_dim(), data.class_count)?;
            let prior = hyper.prior_variance;
            if !(prior.is_finite() && prior > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "hmc needs a positive prior variance, got {prior}"
                )));
            }
            let cfg = hyper.hmc_config(prior, hyper.seed);
            let run = hmc_sample_on(train.x.view(), &train.y, &arch, &cfg)?;
            let mut out = TrainOutput::with_model(Model::Hmc {
                samples: run.samples,
                prior_variance: prior,
            });
            out.chain = run.diagnostics;
            out.low_acceptance = Some(run.low_acceptance);
            Ok(out)
        }
    }
}

fn require_logit_inputs(method: Method, data: &Resolved) -> Result<()> {
    if data.logit_inputs && data.input_dim() == data.class_count {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{} interprets inputs as logits over the label classes; this \
             source has {} input columns for {} classes",
            method.name(),
            data.input_dim(),
            data.class_count
        )))
    }
}

/// What to run at prediction time: a saved model, or the identity softmax.
pub enum Predictor<'a> {
    Uncalibrated,
    Model(&'a Model),
}

/// Probabilities for `x` under the predictor, with shape/class checks.
pub fn predict(
    p: &Predictor,
    x: ArrayView2<f64>,
    class_count: usize,
    k_override: Option<usize>,
    pred_seed: u64,
) -> Result<ProbMatrix> {
    let check_arch = |arch: &MlpArchitecture| -> Result<()> {
        if arch.input_dim != x.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} input columns, data has {}",
                arch.input_dim,
                x.ncols()
            )));
        }
        if arch.output_dim != class_count {
            return Err(Error::ClassCountMismatch {
                expected: arch.output_dim,
                found: class_count,
            });
        }
        Ok(())
    };
    match p {
        Predictor::Uncalibrated => {
            if x.ncols() != class_count {
                return Err(Error::ClassCountMismatch {
                    expected: class_count,
                    found: x.ncols(),
                });
            }
            ProbMatrix::new(softmax_rows(&x.to_owned()))
        }
        Predictor::Model(Model::Temperature(t)) => {
            if x.ncols() != class_count {
                return Err(Error::ClassCountMismatch {
                    expected: class_count,
                    found: x.ncols(),
                });
            }
            ProbMatrix::new(softmax_rows(&x.mapv(|v| v / t.t)))
        }
        Predictor::Model(Model::Point { arch, weights }) => {
            check_arch(arch)?;
            predict_point_on(weights, x)
        }
        Predictor::Model(Model::Ensemble(e)) => {
            check_arch(&e.arch)?;
            predict_ensemble_on(e, x)
        }
        Predictor::Model(Model::Bnn {
            vp, selected_k, ..
        }) => {
            check_arch(&vp.arch)?;
            let k = k_override.or(*selected_k).ok_or_else(|| {
                Error::InvalidConfig(
                    "model stores no selected K (trained without a validation \
                     split); pass --k"
                        .into(),
                )
            })?;
            predict_bnn_on(
                vp,
                x,
                &PredictiveConfig {
                    k,
                    seed: pred_seed,
                },
            )
        }
        Predictor::Model(Model::Hmc { samples, .. }) => {
            check_arch(&samples.arch)?;
            predict_hmc_on(samples, x)
        }
    }
}

// ---------------------------------------------------------------------------
// artifact writers

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn pretty_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// `confidence,predicted,label,correct` — one row per sample.
pub fn per_sample_csv(probs: &ProbMatrix, labels: &[usize]) -> String {
    let mut out = String::from("confidence,predicted,label,correct\n");
    let preds = probs.predictions();
    let confs = probs.confidences();
    for i in 0..labels.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            confs[i],
            preds[i],
            labels[i],
            u8::from(preds[i] == labels[i])
        ));
    }
    out
}

/// metrics.json + reliability.csv + per_sample.csv under `dir`.
pub fn write_eval_artifacts(
    dir: &Path,
    probs: &ProbMatrix,
    labels: &[usize],
    bins: usize,
) -> Result<MetricsReport> {
    fs::create_dir_all(dir)?;
    let report = CalibrationMetrics::compute(probs, labels, bins)?.report();
    write_text(&dir.join("metrics.json"), &pretty_json(&report)?)?;
    write_text(
        &dir.join("reliability.csv"),
        &reliability_bins(probs, labels, bins)?.to_csv(),
    )?;
    write_text(&dir.join("per_sample.csv"), &per_sample_csv(probs, labels))?;
    Ok(report)
}

fn k_curve_csv(sel: &KSelection) -> String {
    let mut out = String::from("k,val_ece\n");
    for &(k, e) in &sel.curve {
        out.push_str(&format!("{k},{e}\n"));
    }
    out
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    method: &'a str,
    seed: u64,
    degraded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    low_acceptance: Option<bool>,
}

/// Logs + summary next to the model file. Returns the summary JSON path.
fn write_train_artifacts(
    dir: &Path,
    method: Method,
    seed_value: u64,
    out: &TrainOutput,
) -> Result<()> {
    if !out.log.is_empty() {
        write_text(&dir.join("train_log.csv"), &train_log_to_csv(&out.log))?;
    }
    if !out.chain.is_empty() {
        write_text(&dir.join("chain.csv"), &diagnostics_to_csv(&out.chain))?;
    }
    if let Some(sel) = &out.k_selection {
        write_text(
            &dir.join(format!("grid_{}.csv", method.name())),
            &k_curve_csv(sel),
        )?;
    }
    let summary = TrainSummary {
        method: method.name(),
        seed: seed_value,
        degraded: out.degraded,
        temperature: out.temperature,
        selected_k: out.model.as_ref().and_then(|m| match m {
            Model::Bnn { selected_k, .. } => *selected_k,
            _ => None,
        }),
        low_acceptance: out.low_acceptance,
    };
    write_text(&dir.join("train_summary.json"), &pretty_json(&summary)?)?;
    if out.degraded {
        eprintln!(
            "warning: {} training degraded (accuracy stayed near chance)",
            method.name()
        );
    }
    if out.low_acceptance == Some(true) {
        eprintln!(
            "warning: {} chain acceptance below 0.1; samples unreliable",
            method.name()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// commands

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let hyper = Hyper::from_args(&a.hyper, 100, 1e-3)?;
    let data = resolve(&a.source, hyper.seed, false)?;
    let out = train_method(a.method, &data, &hyper, a.bins)?;
    let model = out
        .model
        .as_ref()
        .expect("every trainable method yields a model");
    if let Some(parent) = a.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    model.save(&a.out)?;
    let dir = a
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    write_train_artifacts(&dir, a.method, hyper.seed, &out)
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let data = resolve(&a.source, a.seed, false)?;
    let set = data.eval_set();
    let probs = predict(
        &Predictor::Model(&model),
        set.x.view(),
        data.class_count,
        a.k,
        seed::derive(a.seed, "predict"),
    )?;
    write_eval_artifacts(&a.out, &probs, &set.y, a.bins)?;
    Ok(())
}

#[derive(Serialize)]
struct HyperEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    architecture: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prior_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    members: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    adversarial_eps: Option<f64>,
}

#[derive(Serialize)]
struct MethodReport {
    method: String,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hyperparameters: Option<HyperEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    val: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<MetricsReport>,
    runtime_seconds: f64,
}

#[derive(Serialize)]
struct ComparisonReport {
    seed: u64,
    bins: usize,
    methods: Vec<MethodReport>,
}

struct MethodRun {
    hyperparameters: HyperEcho,
    val: Option<MetricsReport>,
    test: MetricsReport,
}

fn run_compare_method(
    method: Method,
    data: &Resolved,
    hyper: &Hyper,
    bins: usize,
    dir: &Path,
) -> Result<MethodRun> {
    fs::create_dir_all(dir)?;
    let (predictor_model, out) = if method == Method::Uncalibrated {
        require_logit_inputs(method, data)?;
        (None, None)
    } else {
        let out = train_method(method, data, hyper, bins)?;
        (out.model.clone(), Some(out))
    };
    if let Some(model) = &predictor_model {
        model.save(&dir.join("model.json"))?;
    }
    if let Some(out) = &out {
        write_train_artifacts(dir, method, hyper.seed, out)?;
    }
    let predictor = match &predictor_model {
        Some(m) => Predictor::Model(m),
        None => Predictor::Uncalibrated,
    };
    let val = match &data.val {
        Some(val_set) => {
            let probs = predict(
                &predictor,
                val_set.x.view(),
                data.class_count,
                None,
                seed::derive(hyper.seed, "predict-val"),
            )?;
            Some(CalibrationMetrics::compute(&probs, &val_set.y, bins)?.report())
        }
        None => None,
    };
    let test_set = data.eval_set();
    let probs = predict(
        &predictor,
        test_set.x.view(),
        data.class_count,
        None,
        seed::derive(hyper.seed, "predict"),
    )?;
    let test = write_eval_artifacts(dir, &probs, &test_set.y, bins)?;

    let arch_label = hyper
        .arch(data.input_dim(), data.class_count)
        .map(|a| a.label())
        .ok();
    let hyperparameters = match method {
        Method::Uncalibrated => HyperEcho {
            temperature: None,
            architecture: None,
            prior_variance: None,
            beta: None,
            selected_k: None,
            members: None,
            adversarial_eps: None,
        },
        Method::Ts => HyperEcho {
            temperature: out.as_ref().and_then(|o| o.temperature),
            architecture: None,
            prior_variance: None,
            beta: None,
            selected_k: None,
            members: None,
            adversarial_eps: None,
        },
        Method::Map => HyperEcho {
            temperature: None,
            architecture: arch_label,
            prior_variance: hyper.point_prior()?,
            beta: None,
            selected_k: None,
            members: None,
            adversarial_eps: None,
        },
        Method::Ensemble => HyperEcho {
            temperature: None,
            architecture: arch_label,
            prior_variance: hyper.point_prior()?,
            beta: None,
            selected_k: None,
            members: Some(hyper.members),
            adversarial_eps: out.as_ref().and_then(|o| o.adversarial_eps),
        },
        Method::BnnMfvi | Method::BnnMfvilr => HyperEcho {
            temperature: None,
            architecture: arch_label,
            prior_variance: Some(hyper.prior_variance),
            beta: Some(hyper.beta),
            selected_k: out
                .as_ref()
                .and_then(|o| o.k_selection.as_ref().map(|s| s.k_star)),
            members: None,
            adversarial_eps: None,
        },
        Method::Hmc => HyperEcho {
            temperature: None,
            architecture: arch_label,
            prior_variance: Some(hyper.prior_variance),
            beta: None,
            selected_k: None,
            members: None,
            adversarial_eps: None,
        },
    };
    Ok(MethodRun {
        hyperparameters,
        val,
        test,
    })
}

fn comparison_csv(reports: &[MethodReport]) -> String {
    let mut out = String::from("method,split,ece,ece_percent,accuracy,nll,brier\n");
    for r in reports {
        for (split, m) in [("val", &r.val), ("test", &r.test)] {
            if let Some(m) = m {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.method, split, m.ece, m.ece_percent, m.accuracy, m.nll, m.brier
                ));
            }
        }
    }
    out
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    if a.methods.is_empty() {
        return Err(Error::InvalidConfig("--methods is empty".into()));
    }
    for (i, m) in a.methods.iter().enumerate() {
        if a.methods[..i].contains(m) {
            return Err(Error::InvalidConfig(format!(
                "method {} listed twice",
                m.name()
            )));
        }
    }
    let hyper = Hyper::from_args(&a.hyper, 100, 1e-3)?;
    let data = resolve(&a.source, hyper.seed, true)?;
    fs::create_dir_all(&a.out)?;

    let mut reports = Vec::with_capacity(a.methods.len());
    let mut ok_count = 0usize;
    for &method in &a.methods {
        let started = Instant::now();
        let dir = a.out.join(method.name());
        let outcome = run_compare_method(method, &data, &hyper, a.bins, &dir);
        let runtime_seconds = started.elapsed().as_secs_f64();
        let report = match outcome {
            Ok(run) => {
                ok_count += 1;
                MethodReport {
                    method: method.name().to_string(),
                    status: "ok".into(),
                    error: None,
                    hyperparameters: Some(run.hyperparameters),
                    val: run.val,
                    test: Some(run.test),
                    runtime_seconds,
                }
            }
            Err(e) => {
                eprintln!("warning: method {} failed: {e}", method.name());
                MethodReport {
                    method: method.name().to_string(),
                    status: "error".into(),
                    error: Some(e.to_string()),
                    hyperparameters: None,
                    val: None,
                    test: None,
                    runtime_seconds,
                }
            }
        };
        reports.push(report);
    }

    write_text(&a.out.join("comparison.csv"), &comparison_csv(&reports))?;
    let full = ComparisonReport {
        seed: hyper.seed,
        bins: a.bins,
        methods: reports,
    };
    write_text(&a.out.join("comparison.json"), &pretty_json(&full)?)?;
    if ok_count == 0 {
        return Err(Error::InvalidConfig(
            "every requested method failed; see comparison.json".into(),
        ));
    }
    Ok(())
}

pub fn cmd_gen(a: &GenArgs) -> Result<()> {
    let splits = parse_splits(&a.splits)?;
    let ds = synth_miscalibrated(&SynthConfig {
        n: a.n,
        class_count: a.classes,
        scale: a.scale,
        logit_sigma: a.logit_sigma,
        seed: a.seed,
    })?;
    fs::create_dir_all(&a.out)?;
    write_text(&a.out.join("data.csv"), &dataset_to_csv(&ds))?;
    let manifest = decal_core::data::io::Manifest {
        csv: "data.csv".into(),
        class_count: a.classes,
        splits,
    };
    manifest.validate()?;
    write_text(&a.out.join("manifest.json"), &pretty_json(&manifest)?)?;
    Ok(())
}

fn parse_splits(spec: &str) -> Result<SplitFractions> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::InvalidConfig(format!(
            "--splits wants three comma-separated fractions, got {spec:?}"
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidConfig(format!("split fraction {s:?} is not a number")))
    };
    let f = SplitFractions {
        train: parse(parts[0])?,
        val: parse(parts[1])?,
        test: parse(parts[2])?,
    };
    f.validate()?;
    Ok(f)
}
