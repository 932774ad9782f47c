//! `decal` — train, evaluate, and compare post-hoc probability calibrators
//! on (logit, label) datasets or the built-in 2-D toy problem.

mod run;
mod source;
mod toy;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use decal_core::opt::LrSchedule;
use decal_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "decal",
    version,
    about = "Decoupled probability calibration: temperature scaling, point and \
             ensemble calibrators, variational BNNs, and an HMC reference"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Fit one calibration method and write a model file.
    Train(TrainArgs),
    /// Evaluate a saved model: metrics, reliability bins, per-sample table.
    Eval(EvalArgs),
    /// Train and evaluate several methods on identical splits.
    Compare(CompareArgs),
    /// Run the 2-D toy study: prior {16,32} x arch {0/-,1/25,1/50}.
    Toy(ToyArgs),
    /// Generate a miscalibrated synthetic logit dataset plus manifest.
    Gen(GenArgs),
}

/// Calibration method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Raw softmax of the stored logits.
    Uncalibrated,
    /// Temperature scaling.
    Ts,
    /// MAP point network (`--prior-variance 0` drops the prior: plain ML).
    Map,
    /// Ensemble of point networks with FGSM-augmented batches.
    Ensemble,
    /// Variational BNN, plain mean-field estimator.
    BnnMfvi,
    /// Variational BNN, local-reparameterization estimator.
    BnnMfvilr,
    /// Hamiltonian Monte Carlo over the same network weights.
    Hmc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Uncalibrated => "uncalibrated",
            Method::Ts => "ts",
            Method::Map => "map",
            Method::Ensemble => "ensemble",
            Method::BnnMfvi => "bnn-mfvi",
            Method::BnnMfvilr => "bnn-mfvilr",
            Method::Hmc => "hmc",
        }
    }
}

/// Where the rows come from. Exactly one of the three must be given.
#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// CSV with header `logit_0,..,logit_{C-1},label`.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// JSON manifest naming a CSV and train/val/test fractions.
    #[arg(long, value_name = "FILE", conflicts_with = "data")]
    pub manifest: Option<PathBuf>,
    /// Use the generated 2-D four-Gaussians problem instead of a file.
    #[arg(long, conflicts_with_all = ["data", "manifest"])]
    pub toy: bool,
    /// Training points per class when --toy is set.
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub per_class: usize,
}

/// Knobs shared by every trainer. Only the ones a method reads apply.
#[derive(Args, Debug, Clone)]
pub struct HyperArgs {
    /// Root seed; every stream (splits, init, batches, MC) derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// ELBO likelihood/KL trade-off.
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// MC samples per ELBO estimate.
    #[arg(long, default_value_t = 1, value_name = "M")]
    pub elbo_samples: usize,
    /// Hidden shape `LxU` (layers x units); `0` means no hidden layer.
    #[arg(long, default_value = "1x16", value_name = "LxU")]
    pub hidden: String,
    /// Training epochs (default 100; the toy study uses 150).
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub batch_size: usize,
    /// Adam base learning rate (default 1e-3; the toy study uses 1e-2).
    #[arg(long)]
    pub lr: Option<f64>,
    /// `step` (x0.1 at 50% and 75%) or `linear` (decay to zero).
    #[arg(long, default_value = "linear")]
    pub lr_schedule: LrSchedule,
    /// Candidate MC sample counts for BNN prediction, ascending.
    #[arg(long, default_value = "1,3,10,30,100,300,1000", value_name = "K1,K2,..")]
    pub k_grid: String,
    /// Gaussian prior variance; 0 disables the prior for `map`.
    #[arg(long, default_value_t = 1.0)]
    pub prior_variance: f64,
    /// Ensemble size.
    #[arg(long, default_value_t = 5)]
    pub members: usize,
    /// FGSM radius for ensemble batches; default 1% of the mean feature
    /// range, 0 disables augmentation.
    #[arg(long, value_name = "EPS")]
    pub adv_eps: Option<f64>,
    /// Discarded HMC iterations (step size adapts in this window).
    #[arg(long, default_value_t = 300)]
    pub hmc_burnin: usize,
    /// Retained posterior draws.
    #[arg(long, default_value_t = 350)]
    pub hmc_samples: usize,
    /// Keep every n-th post-burn-in draw.
    #[arg(long, default_value_t = 2)]
    pub hmc_thinning: usize,
    #[arg(long, default_value_t = 12)]
    pub hmc_leapfrog_steps: usize,
    #[arg(long, default_value_t = 0.02)]
    pub hmc_step_size: f64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Model file to write; logs land next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Reliability bins used during K selection.
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Model file produced by `train` or `compare`.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Directory for metrics.json, reliability.csv, per_sample.csv.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    /// MC samples for BNN models; overrides any stored selection.
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
    /// Seed for the predictive sample stream (BNN models).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Comma-separated method list, each trained on the same splits.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "uncalibrated,ts,bnn-mfvilr"
    )]
    pub methods: Vec<Method>,
    /// Directory for comparison.{json,csv} and per-method subdirectories.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Args, Debug)]
pub struct ToyArgs {
    /// Directory for toy_results.csv and the confidence-map grids.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    /// Training points per class (val and test use half each).
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub per_class: usize,
    /// Confidence maps are sampled on a resolution x resolution grid.
    #[arg(long, default_value_t = 50)]
    pub grid_resolution: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Directory for data.csv and manifest.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Rows to generate.
    #[arg(long, default_value_t = 10000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    /// Overconfidence factor applied to the true logits.
    #[arg(long, default_value_t = 3.0)]
    pub scale: f64,
    /// Spread of the latent logit draws.
    #[arg(long, default_value_t = 1.5)]
    pub logit_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train,val,test fractions recorded in the manifest.
    #[arg(long, default_value = "0.7,0.15,0.15", value_name = "TR,VA,TE")]
    pub splits: String,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            emit_error("validation", &e.to_string());
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            let kind = if e.is_numerical() { "numerical" } else { "validation" };
            emit_error(kind, &e.to_string());
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

/// One-line machine-readable error on stderr.
fn emit_error(kind: &str, message: &str) {
    let payload = serde_json::json!({ "error": message, "kind": kind });
    eprintln!("{payload}");
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Train(a) => run::cmd_train(&a),
        Cmd::Eval(a) => run::cmd_eval(&a),
        Cmd::Compare(a) => run::cmd_compare(&a),
        Cmd::Toy(a) => toy::cmd_toy(&a),
        Cmd::Gen(a) => run::cmd_gen(&a),
    }
}

/// `LxU` hidden-shape spec: `1x25`, `2x16`, or `0` for no hidden layer.
pub fn parse_hidden(spec: &str) -> Result<(usize, usize)> {
    let bad = || {
        Error::InvalidConfig(format!(
            "hidden spec {spec:?} is not LxU (e.g. 1x25) or 0"
        ))
    };
    let s = spec.trim();
    if let Some((l, u)) = s.split_once(['x', 'X']) {
        let layers: usize = l.trim().parse().map_err(|_| bad())?;
        let units: usize = u.trim().parse().map_err(|_| bad())?;
        if layers > 0 && units == 0 {
            return Err(bad());
        }
        Ok((layers, units))
    } else {
        match s.parse::<usize>() {
            Ok(0) => Ok((0, 0)),
            _ => Err(bad()),
        }
    }
}

/// Comma-separated ascending K grid.
pub fn parse_k_grid(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|tok| {
            tok.trim().parse::<usize>().map_err(|_| {
                Error::InvalidConfig(format!("k grid entry {tok:?} is not an integer"))
            })
        })
        .collect()
}
