//! Versioned JSON model files.
//!
//! One format serves every calibrator: a `format_version`, a `kind` tag,
//! and kind-specific payloads (architecture header plus row-major weight
//! arrays). Serialization is byte-deterministic — struct fields serialize
//! in declaration order and floats use shortest-roundtrip formatting — so
//! identical models produce identical files.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::baselines::{Ensemble, Temperature};
use crate::bnn::{BnnTrainConfig, VariationalLayer, VariationalParams};
use crate::error::{Error, Result};
use crate::hmc::PosteriorSamples;
use crate::nn::{DenseLayer, MlpArchitecture, PointWeights};

pub const FORMAT_VERSION: u32 = 1;

/// A fitted calibrator, ready to serialize or predict with.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Temperature(Temperature),
    Point {
        arch: MlpArchitecture,
        weights: PointWeights,
    },
    Ensemble(Ensemble),
    Bnn {
        vp: VariationalParams,
        train_config: BnnTrainConfig,
        /// Validation-selected MC sample count, if selection has run.
        selected_k: Option<usize>,
    },
    Hmc {
        samples: PosteriorSamples,
        prior_variance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelTag {
    Temperature,
    Point,
    Ensemble,
    Bnn,
    Hmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerJson {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariationalLayerJson {
    mu_w: Vec<Vec<f64>>,
    rho_w: Vec<Vec<f64>>,
    mu_b: Vec<f64>,
    rho_b: Vec<f64>,
}

/// On-disk shape. Exactly the fields for the given `kind` must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFileJson {
    format_version: u32,
    kind: ModelTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sampler: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arch: Option<MlpArchitecture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layers: Option<Vec<LayerJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    members: Option<Vec<Vec<LayerJson>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    posterior: Option<Vec<VariationalLayerJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train_config: Option<BnnTrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selected_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<Vec<LayerJson>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    acceptance_rate: Option<f64>,
}

impl ModelFileJson {
    fn empty(kind: ModelTag) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind,
            sampler: None,
            temperature: None,
            arch: None,
            layers: None,
            members: None,
            posterior: None,
            train_config: None,
            selected_k: None,
            samples: None,
            prior_variance: None,
            acceptance_rate: None,
        }
    }
}

fn matrix_to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(Error::ModelFile(format!("{what}: empty weight matrix")));
    }
    let mut flat = Vec::with_capacity(nrows * ncols);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::ModelFile(format!(
                "{what}: row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
        flat.extend_from_slice(r);
    }
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::ModelFile(format!("{what}: {e}")))
}

fn point_to_json(w: &PointWeights) -> Vec<LayerJson> {
    w.layers
        .iter()
        .map(|l| LayerJson {
            w: matrix_to_rows(&l.w),
            b: l.b.to_vec(),
        })
        .collect()
}

fn point_from_json(arch: &MlpArchitecture, layers: &[LayerJson], what: &str) -> Result<PointWeights> {
    let dims = arch.layer_dims();
    if layers.len() != dims.len() {
        return Err(Error::ModelFile(format!(
            "{what}: {} layers, architecture has {}",
            layers.len(),
            dims.len()
        )));
    }
    let mut out = Vec::with_capacity(layers.len());
    for (li, (l, &(fi, fo))) in layers.iter().zip(&dims).enumerate() {
        let w = rows_to_matrix(&l.w, &format!("{what} layer {li}"))?;
        if w.dim() != (fi, fo) || l.b.len() != fo {
            return Err(Error::ModelFile(format!(
                "{what} layer {li}: shape {:?}/{} does not match architecture ({fi}, {fo})",
                w.dim(),
                l.b.len()
            )));
        }
        out.push(DenseLayer {
            w,
            b: Array1::from(l.b.clone()),
        });
    }
    Ok(PointWeights { layers: out })
}

fn variational_to_json(vp: &VariationalParams) -> Vec<VariationalLayerJson> {
    vp.layers
        .iter()
        .map(|l| VariationalLayerJson {
            mu_w: matrix_to_rows(&l.mu_w),
            rho_w: matrix_to_rows(&l.rho_w),
            mu_b: l.mu_b.to_vec(),
            rho_b: l.rho_b.to_vec(),
        })
        .collect()
}

fn variational_from_json(
    arch: &MlpArchitecture,
    layers: &[VariationalLayerJson],
) -> Result<VariationalParams> {
    let dims = arch.layer_dims();
    if layers.len() != dims.len() {
        return Err(Error::ModelFile(format!(
            "posterior: {} layers, architecture has {}",
            layers.len(),
            dims.len()
        )));
    }
    let mut out = Vec::with_capacity(layers.len());
    for (li, (l, &(fi, fo))) in layers.iter().zip(&dims).enumerate() {
        let mu_w = rows_to_matrix(&l.mu_w, &format!("posterior layer {li} mu_w"))?;
        let rho_w = rows_to_matrix(&l.rho_w, &format!("posterior layer {li} rho_w"))?;
        if mu_w.dim() != (fi, fo)
            || rho_w.dim() != (fi, fo)
            || l.mu_b.len() != fo
            || l.rho_b.len() != fo
        {
            return Err(Error::ModelFile(format!(
                "posterior layer {li}: shapes do not match architecture ({fi}, {fo})"
            )));
        }
        out.push(VariationalLayer {
            mu_w,
            rho_w,
            mu_b: Array1::from(l.mu_b.clone()),
            rho_b: Array1::from(l.rho_b.clone()),
        });
    }
    Ok(VariationalParams {
        arch: *arch,
        layers: out,
    })
}

impl Model {
    /// Serialize to the versioned JSON format (pretty-printed, trailing
    /// newline, byte-deterministic).
    pub fn to_json(&self) -> Result<String> {
        let file = match self {
            Model::Temperature(t) => ModelFileJson {
                temperature: Some(t.t),
                ..ModelFileJson::empty(ModelTag::Temperature)
            },
            Model::Point { arch, weights } => {
                if !weights.matches(arch) {
                    return Err(Error::ModelFile(
                        "weights do not match the architecture".into(),
                    ));
                }
                ModelFileJson {
                    arch: Some(*arch),
                    layers: Some(point_to_json(weights)),
                    ..ModelFileJson::empty(ModelTag::Point)
                }
            }
            Model::Ensemble(e) => ModelFileJson {
                arch: Some(e.arch),
                members: Some(e.members.iter().map(point_to_json).collect()),
                ..ModelFileJson::empty(ModelTag::Ensemble)
            },
            Model::Bnn {
                vp,
                train_config,
                selected_k,
            } => ModelFileJson {
                arch: Some(vp.arch),
                posterior: Some(variational_to_json(vp)),
                train_config: Some(*train_config),
                selected_k: *selected_k,
                ..ModelFileJson::empty(ModelTag::Bnn)
            },
            Model::Hmc {
                samples,
                prior_variance,
            } => ModelFileJson {
                sampler: Some("hmc".into()),
                arch: Some(samples.arch),
                samples: Some(samples.samples.iter().map(point_to_json).collect()),
                prior_variance: Some(*prior_variance),
                acceptance_rate: Some(samples.acceptance_rate),
                ..ModelFileJson::empty(ModelTag::Hmc)
            },
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    /// Parse and validate a model file.
    pub fn from_json(text: &str) -> Result<Model> {
        let file: ModelFileJson = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: file.format_version,
                supported: FORMAT_VERSION,
            });
        }
        let required_arch = |a: &Option<MlpArchitecture>| -> Result<MlpArchitecture> {
            let arch = a.ok_or_else(|| Error::ModelFile("missing arch".into()))?;
            arch.validate()?;
            Ok(arch)
        };
        // every kind owns an exact field set; anything extra is a corrupt
        // or mixed file
        let check_absent = |cond: bool, what: &str| -> Result<()> {
            if cond {
                Err(Error::ModelFile(format!(
                    "field {what} is not valid for this model kind"
                )))
            } else {
                Ok(())
            }
        };
        match file.kind {
            ModelTag::Temperature => {
                check_absent(file.arch.is_some(), "arch")?;
                check_absent(file.layers.is_some(), "layers")?;
                check_absent(file.members.is_some(), "members")?;
                check_absent(file.posterior.is_some(), "posterior")?;
                check_absent(file.samples.is_some(), "samples")?;
                check_absent(file.sampler.is_some(), "sampler")?;
                check_absent(file.train_config.is_some(), "train_config")?;
                let t = file
                    .temperature
                    .ok_or_else(|| Error::ModelFile("missing temperature".into()))?;
                Ok(Model::Temperature(Temperature::new(t)?))
            }
            ModelTag::Point => {
                check_absent(file.temperature.is_some(), "temperature")?;
                check_absent(file.members.is_some(), "members")?;
                check_absent(file.posterior.is_some(), "posterior")?;
                check_absent(file.samples.is_some(), "samples")?;
                check_absent(file.sampler.is_some(), "sampler")?;
                let arch = required_arch(&file.arch)?;
                let layers = file
                    .layers
                    .as_ref()
                    .ok_or_else(|| Error::ModelFile("missing layers".into()))?;
                let weights = point_from_json(&arch, layers, "layers")?;
                Ok(Model::Point { arch, weights })
            }
            ModelTag::Ensemble => {
                check_absent(file.temperature.is_some(), "temperature")?;
                check_absent(file.layers.is_some(), "layers")?;
                check_absent(file.posterior.is_some(), "posterior")?;
                check_absent(file.samples.is_some(), "samples")?;
                check_absent(file.sampler.is_some(), "sampler")?;
                let arch = required_arch(&file.arch)?;
                let members = file
                    .members
                    .as_ref()
                    .ok_or_else(|| Error::ModelFile("missing members".into()))?;
                if members.is_empty() {
                    return Err(Error::ModelFile("ensemble has no members".into()));
                }
                let members = members
                    .iter()
                    .enumerate()
                    .map(|(i, m)| point_from_json(&arch, m, &format!("member {i}")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Model::Ensemble(Ensemble { arch, members }))
            }
            ModelTag::Bnn => {
                check_absent(file.temperature.is_some(), "temperature")?;
                check_absent(file.layers.is_some(), "layers")?;
                check_absent(file.members.is_some(), "members")?;
                check_absent(file.samples.is_some(), "samples")?;
                check_absent(file.sampler.is_some(), "sampler")?;
                let arch = required_arch(&file.arch)?;
                let posterior = file
                    .posterior
                    .as_ref()
                    .ok_or_else(|| Error::ModelFile("missing posterior".into()))?;
                let train_config = file
                    .train_config
                    .ok_or_else(|| Error::ModelFile("missing train_config".into()))?;
                let vp = variational_from_json(&arch, posterior)?;
                Ok(Model::Bnn {
                    vp,
                    train_config,
                    selected_k: file.selected_k,
                })
            }
            ModelTag::Hmc => {
                check_absent(file.temperature.is_some(), "temperature")?;
                check_absent(file.layers.is_some(), "layers")?;
                check_absent(file.members.is_some(), "members")?;
                check_absent(file.posterior.is_some(), "posterior")?;
                check_absent(file.train_config.is_some(), "train_config")?;
                if file.sampler.as_deref() != Some("hmc") {
                    return Err(Error::ModelFile(
                        "hmc model file must carry sampler: \"hmc\"".into(),
                    ));
                }
                let arch = required_arch(&file.arch)?;
                let samples = file
                    .samples
                    .as_ref()
                    .ok_or_else(|| Error::ModelFile("missing samples".into()))?;
                if samples.is_empty() {
                    return Err(Error::ModelFile("hmc model has no samples".into()));
                }
                let prior_variance = file
                    .prior_variance
                    .ok_or_else(|| Error::ModelFile("missing prior_variance".into()))?;
                let acceptance_rate = file
                    .acceptance_rate
                    .ok_or_else(|| Error::ModelFile("missing acceptance_rate".into()))?;
                if !(0.0..=1.0).contains(&acceptance_rate) {
                    return Err(Error::ModelFile(format!(
                        "acceptance_rate {acceptance_rate} outside [0, 1]"
                    )));
                }
                let samples = samples
                    .iter()
                    .enumerate()
                    .map(|(i, s)| point_from_json(&arch, s, &format!("sample {i}")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Model::Hmc {
                    samples: PosteriorSamples {
                        arch,
                        samples,
                        acceptance_rate,
                    },
                    prior_variance,
                })
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model> {
        Model::from_json(&std::fs::read_to_string(path)?)
    }
}
