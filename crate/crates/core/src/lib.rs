//! Decoupled probability calibration.
//!
//! This crate recalibrates the output of any pre-trained classifier from
//! its exported logits alone. The pipeline is: parse a `(logit, label)`
//! dataset, fit a calibration map on a validation split, and emit
//! calibrated class probabilities plus calibration metrics.
//!
//! Calibrators, from cheapest to most expressive:
//! * [`baselines`] — Temperature Scaling, MAP/ML networks, decoupled
//!   ensembles;
//! * [`bnn`] — the main event: a mean-field variational Bayesian network
//!   over the calibration map, with MC-averaged predictions and
//!   validation-selected sample counts;
//! * [`hmc`] — a Hamiltonian Monte Carlo reference posterior for small
//!   networks, used to sanity-check the variational approximation.
//!
//! [`metrics`] implements ECE, reliability bins, NLL and the Brier score;
//! [`data`] holds dataset types, strict parsers and synthetic generators;
//! [`model`] the versioned on-disk model format. Everything is
//! deterministic given the seeds in the relevant configs.

pub mod baselines;
pub mod bnn;
pub mod data;
pub mod error;
pub mod hmc;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod opt;
pub mod seed;

pub use error::{Error, Result};
