//! Turns `--data` / `--manifest` / `--toy` into concrete train/val/test
//! input matrices, so the command handlers never care where rows came from.

use ndarray::Array2;

use decal_core::data::io::{load_from_manifest, load_logit_csv};
use decal_core::data::{generate_toy, split_indices, LogitDataset, SplitFractions, ToyConfig};
use decal_core::{seed, Error, Result};

use crate::SourceArgs;

/// One split: an `N x D` input matrix plus labels.
#[derive(Debug, Clone)]
pub struct SetPair {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

impl SetPair {
    fn from_logits(ds: LogitDataset) -> Self {
        let labels = ds.labels.clone();
        Self {
            x: ds.logits,
            y: labels,
        }
    }

    /// Reinterpret as a logit dataset (only valid when columns == classes).
    pub fn as_logit_dataset(&self) -> Result<LogitDataset> {
        LogitDataset::new(self.x.clone(), self.y.clone())
    }
}

/// Resolved rows. `val`/`test` are present when the source defines splits.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub train: SetPair,
    pub val: Option<SetPair>,
    pub test: Option<SetPair>,
    pub class_count: usize,
    /// Inputs are logits over the label classes (columns == classes), so
    /// softmax-of-inputs methods (uncalibrated, ts) are meaningful.
    pub logit_inputs: bool,
}

impl Resolved {
    /// The held-out rows if the source has them, otherwise everything.
    pub fn eval_set(&self) -> &SetPair {
        self.test.as_ref().unwrap_or(&self.train)
    }

    pub fn input_dim(&self) -> usize {
        self.train.x.ncols()
    }
}

/// `need_splits` forces a three-way split even for a plain CSV (used by
/// `compare`); a manifest or `--toy` always yields splits.
pub fn resolve(src: &SourceArgs, seed_value: u64, need_splits: bool) -> Result<Resolved> {
    match (&src.data, &src.manifest, src.toy) {
        (Some(path), None, false) => {
            let ds = load_logit_csv(path)?;
            if need_splits {
                split_logits(ds, &SplitFractions::default(), seed_value)
            } else {
                let class_count = ds.class_count();
                Ok(Resolved {
                    train: SetPair::from_logits(ds),
                    val: None,
                    test: None,
                    class_count,
                    logit_inputs: true,
                })
            }
        }
        (None, Some(path), false) => {
            let (manifest, ds) = load_from_manifest(path)?;
            split_logits(ds, &manifest.splits, seed_value)
        }
        (None, None, true) => toy_sets(src.per_class, seed_value),
        (None, None, false) => Err(Error::InvalidConfig(
            "no input: pass --data, --manifest, or --toy".into(),
        )),
        _ => Err(Error::InvalidConfig(
            "pass exactly one of --data, --manifest, --toy".into(),
        )),
    }
}

fn split_logits(
    ds: LogitDataset,
    fractions: &SplitFractions,
    seed_value: u64,
) -> Result<Resolved> {
    let idx = split_indices(ds.len(), fractions, seed::derive(seed_value, "split"))?;
    let class_count = ds.class_count();
    let cut = |rows: &[usize]| -> Result<Option<SetPair>> {
        if rows.is_empty() {
            return Ok(None);
        }
        Ok(Some(SetPair::from_logits(ds.subset(rows)?)))
    };
    let val = cut(&idx.val)?;
    let test = cut(&idx.test)?;
    let train = cut(&idx.train)?.ok_or(Error::EmptyDataset)?;
    Ok(Resolved {
        train,
        val,
        test,
        class_count,
        logit_inputs: true,
    })
}

/// Three independently drawn toy sets; val/test use half the training size.
fn toy_sets(per_class: usize, seed_value: u64) -> Result<Resolved> {
    if per_class == 0 {
        return Err(Error::InvalidConfig("--per-class must be >= 1".into()));
    }
    let draw = |tag: &str, n: usize| -> Result<SetPair> {
        let ds = generate_toy(&ToyConfig {
            per_class: n,
            seed: seed::derive(seed_value, tag),
            ..Default::default()
        })?;
        Ok(SetPair {
            x: ds.features,
            y: ds.labels,
        })
    };
    let held = (per_class / 2).max(1);
    Ok(Resolved {
        train: draw("toy-train", per_class)?,
        val: Some(draw("toy-val", held)?),
        test: Some(draw("toy-test", held)?),
        class_count: 4,
        logit_inputs: false,
    })
}
