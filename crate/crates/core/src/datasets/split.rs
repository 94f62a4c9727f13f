use serde::{Deserialize, Serialize};

use super::CausalDataset;
use crate::error::{Error, Result};
use crate::tensor::RngStream;

/// Train/validation/test fractions plus the seed that draws the partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SplitSpec {
    /// 63/27/10, used for IHDP and ACIC.
    pub fn ihdp(seed: u64) -> Self {
        SplitSpec { train: 0.63, validation: 0.27, test: 0.10, seed }
    }

    /// 56/24/20, used for Twins.
    pub fn twins(seed: u64) -> Self {
        SplitSpec { train: 0.56, validation: 0.24, test: 0.20, seed }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("train", self.train), ("validation", self.validation), ("test", self.test)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("{name} fraction {f} is outside (0, 1)")));
            }
        }
        let sum = self.train + self.validation + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Split sizes for `n` subjects: train and validation rounded, test takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let n_train = ((self.train * n as f64).round() as usize).min(n);
        let n_val = ((self.validation * n as f64).round() as usize).min(n - n_train);
        (n_train, n_val, n - n_train - n_val)
    }
}

#[derive(Clone, Debug)]
pub struct Split {
    pub train: CausalDataset,
    pub validation: CausalDataset,
    pub test: CausalDataset,
    pub train_idx: Vec<usize>,
    pub validation_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Random partition drawn from `spec.seed`. Fails when a part would be empty
/// or the training part lacks one treatment arm; callers may reseed.
pub fn split(data: &CausalDataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let n = data.len();
    let (n_train, n_val, n_test) = spec.sizes(n);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Split(format!(
            "{n} subjects give an empty part ({n_train}/{n_val}/{n_test})"
        )));
    }
    let perm = RngStream::new(spec.seed, 0).permutation(n);
    let train_idx = perm[..n_train].to_vec();
    let validation_idx = perm[n_train..n_train + n_val].to_vec();
    let test_idx = perm[n_train + n_val..].to_vec();

    let train = data.subset(&train_idx);
    let (c, t) = train.arm_counts();
    if c == 0 || t == 0 {
        return Err(Error::Split(format!(
            "training part has {c} control and {t} treated subjects"
        )));
    }
    Ok(Split {
        train,
        validation: data.subset(&validation_idx),
        test: data.subset(&test_idx),
        train_idx,
        validation_idx,
        test_idx,
    })
}
