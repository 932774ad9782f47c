//! The 2-D toy study: four Gaussian blobs, a grid of prior variances and
//! architectures, and MAP / variational / HMC fits of the same networks.
//!
//! Emits `toy_results.csv` (accuracy + ECE per cell and method) and, for the
//! widest architecture, per-method confidence maps over the input plane.

use std::fs;

use ndarray::Array2;

use decal_core::baselines::{predict_point_on, train_map_on, PointTrainConfig};
use decal_core::bnn::{
    predict_bnn_on, select_k_on, train_bnn_on, BnnTrainConfig, Estimator, PredictiveConfig,
};
use decal_core::data::linspace;
use decal_core::hmc::{hmc_sample_on, predict_hmc_on};
use decal_core::metrics::{self, ProbMatrix};
use decal_core::nn::MlpArchitecture;
use decal_core::opt::OptimConfig;
use decal_core::{seed, Error, Result};

use crate::run::{write_text, Hyper};
use crate::source::{resolve, SetPair};
use crate::{SourceArgs, ToyArgs};

const PRIORS: [f64; 2] = [16.0, 32.0];
const ARCHS: [(usize, usize); 3] = [(0, 0), (1, 25), (1, 50)];
/// Confidence maps cover this square of the input plane.
const MAP_LO: f64 = -6.0;
const MAP_HI: f64 = 6.0;

pub fn cmd_toy(a: &ToyArgs) -> Result<()> {
    if a.grid_resolution < 2 {
        return Err(Error::InvalidConfig(
            "--grid-resolution must be >= 2".into(),
        ));
    }
    let hyper = Hyper::from_args(&a.hyper, 150, 1e-2)?;
    let src = SourceArgs {
        data: None,
        manifest: None,
        toy: true,
        per_class: a.per_class,
    };
    let data = resolve(&src, hyper.seed, false)?;
    let train = &data.train;
    let val = data.val.as_ref().expect("toy source has a val set");
    let test = data.test.as_ref().expect("toy source has a test set");

    fs::create_dir_all(&a.out)?;
    let mut results =
        String::from("prior_variance,architecture,method,accuracy,ece,ece_percent\n");
    let grid = grid_inputs(a.grid_resolution);
    // The widest network gets the confidence maps.
    let map_cell = (PRIORS[0], *ARCHS.last().expect("non-empty arch list"));

    let mut cell = 0u64;
    for &prior_variance in &PRIORS {
        for &(hidden_layers, units) in &ARCHS {
            let arch = MlpArchitecture::new(2, hidden_layers, units, 4)?;
            let draw_maps = (prior_variance, (hidden_layers, units)) == map_cell;

            // MAP point fit of the same network and prior.
            let map_cfg = PointTrainConfig {
                prior_variance: Some(prior_variance),
                optim: cell_optim(&hyper, "toy-map", cell),
            };
            let (weights, _) = train_map_on(train.x.view(), &train.y, &arch, &map_cfg)?;
            let probs = predict_point_on(&weights, test.x.view())?;
            push_row(&mut results, prior_variance, &arch, "map", &probs, test, a.bins)?;
            if draw_maps {
                let p = predict_point_on(&weights, grid.view())?;
                write_text(
                    &a.out.join("grid_map.csv"),
                    &grid_csv(&grid, &p),
                )?;
            }

            // Mean-field BNN with the local-reparameterization estimator.
            let bnn_cfg = BnnTrainConfig {
                arch,
                beta: hyper.beta,
                elbo_samples: hyper.elbo_samples,
                estimator: Estimator::Mfvilr,
                prior_variance,
                optim: cell_optim(&hyper, "toy-bnn", cell),
            };
            let trained = train_bnn_on(train.x.view(), &train.y, &bnn_cfg)?;
            if trained.degraded {
                eprintln!(
                    "warning: bnn-mfvilr degraded on prior {prior_variance}, arch {}",
                    arch.label()
                );
            }
            let sel = select_k_on(
                &trained.vp,
                val.x.view(),
                &val.y,
                &hyper.k_grid,
                seed::derive_indexed(hyper.seed, "toy-ksel", cell),
                a.bins,
            )?;
            let pc = PredictiveConfig {
                k: sel.k_star,
                seed: seed::derive_indexed(hyper.seed, "toy-pred", cell),
            };
            let probs = predict_bnn_on(&trained.vp, test.x.view(), &pc)?;
            push_row(
                &mut results,
                prior_variance,
                &arch,
                "bnn-mfvilr",
                &probs,
                test,
                a.bins,
            )?;
            if draw_maps {
                let p = predict_bnn_on(&trained.vp, grid.view(), &pc)?;
                write_text(&a.out.join("grid_bnn-mfvilr.csv"), &grid_csv(&grid, &p))?;
            }

            // HMC over the identical posterior.
            let hmc_cfg = hyper.hmc_config(
                prior_variance,
                seed::derive_indexed(hyper.seed, "toy-hmc", cell),
            );
            let run = hmc_sample_on(train.x.view(), &train.y, &arch, &hmc_cfg)?;
            if run.low_acceptance {
                eprintln!(
                    "warning: hmc acceptance below 0.1 on prior {prior_variance}, arch {} \
                     (rate {:.3}); samples unreliable",
                    arch.label(),
                    run.samples.acceptance_rate
                );
            }
            let probs = predict_hmc_on(&run.samples, test.x.view())?;
            push_row(&mut results, prior_variance, &arch, "hmc", &probs, test, a.bins)?;
            if draw_maps {
                let p = predict_hmc_on(&run.samples, grid.view())?;
                write_text(&a.out.join("grid_hmc.csv"), &grid_csv(&grid, &p))?;
            }

            cell += 1;
        }
    }
    write_text(&a.out.join("toy_results.csv"), &results)
}

fn cell_optim(hyper: &Hyper, tag: &str, cell: u64) -> OptimConfig {
    OptimConfig {
        seed: seed::derive_indexed(hyper.seed, tag, cell),
        ..hyper.optim()
    }
}

fn push_row(
    out: &mut String,
    prior_variance: f64,
    arch: &MlpArchitecture,
    method: &str,
    probs: &ProbMatrix,
    test: &SetPair,
    bins: usize,
) -> Result<()> {
    let acc = metrics::accuracy(probs, &test.y)?;
    let ece = metrics::ece(probs, &test.y, bins)?;
    out.push_str(&format!(
        "{},{},{},{},{},{}\n",
        prior_variance,
        arch.label(),
        method,
        acc,
        ece,
        100.0 * ece
    ));
    Ok(())
}

/// Row-major grid over the map square, x fastest.
fn grid_inputs(resolution: usize) -> Array2<f64> {
    let xs = linspace(MAP_LO, MAP_HI, resolution);
    let ys = linspace(MAP_LO, MAP_HI, resolution);
    let mut g = Array2::zeros((resolution * resolution, 2));
    for (yi, &y) in ys.iter().enumerate() {
        for (xi, &x) in xs.iter().enumerate() {
            let r = yi * resolution + xi;
            g[[r, 0]] = x;
            g[[r, 1]] = y;
        }
    }
    g
}

/// `x,y,confidence,predicted` per grid point.
fn grid_csv(grid: &Array2<f64>, probs: &ProbMatrix) -> String {
    let mut out = String::from("x,y,confidence,predicted\n");
    let confs = probs.confidences();
    let preds = probs.predictions();
    for r in 0..grid.nrows() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            grid[[r, 0]],
            grid[[r, 1]],
            confs[r],
            preds[r]
        ));
    }
    out
}
