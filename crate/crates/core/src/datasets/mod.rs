//! Benchmark loaders, the selection-bias generator, splitting and
//! covariate standardization.

mod acic;
mod ihdp;
mod split;
mod standardize;
mod synthetic;
mod twins;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub use acic::load_acic;
pub use ihdp::{load_ihdp, load_ihdp_file, IHDP_CONTINUOUS, IHDP_COVARIATES};
pub use split::{split, Split, SplitSpec};
pub use standardize::{standardize, Standardizer};
pub use synthetic::{
    export_synthetic, generate_synthetic, repair_psd, shift_kl, SynthConfig, SyntheticData,
};
pub use twins::{load_twins, TwinsOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Ihdp,
    Twins,
    Acic,
    Synthetic,
}

/// Observational data with whatever ground truth the benchmark provides.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalDataset {
    pub x: Matrix,
    pub t: Vec<u8>,
    pub y_factual: Vec<f64>,
    pub y_cf: Option<Vec<f64>>,
    pub mu0: Option<Vec<f64>>,
    pub mu1: Option<Vec<f64>>,
    pub columns: Vec<Column>,
    pub source: Source,
}

impl CausalDataset {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn column_kinds(&self) -> Vec<ColumnKind> {
        self.columns.iter().map(|c| c.kind).collect()
    }

    pub fn treatment_f64(&self) -> Vec<f64> {
        self.t.iter().map(|&t| f64::from(t)).collect()
    }

    pub fn arm_counts(&self) -> (usize, usize) {
        let treated = self.t.iter().filter(|&&t| t == 1).count();
        (self.len() - treated, treated)
    }

    pub fn outcome_is_binary(&self) -> bool {
        self.y_factual.iter().all(|&y| y == 0.0 || y == 1.0)
    }

    /// True per-subject effect: `mu1 - mu0` when noiseless potential outcomes
    /// are present, otherwise the sign-corrected factual/counterfactual gap.
    pub fn true_ite(&self) -> Option<Vec<f64>> {
        if let (Some(m0), Some(m1)) = (&self.mu0, &self.mu1) {
            return Some(m1.iter().zip(m0).map(|(a, b)| a - b).collect());
        }
        let cf = self.y_cf.as_ref()?;
        Some(
            self.t
                .iter()
                .zip(&self.y_factual)
                .zip(cf)
                .map(|((&t, &yf), &ycf)| if t == 1 { yf - ycf } else { ycf - yf })
                .collect(),
        )
    }

    pub fn true_ate(&self) -> Option<f64> {
        let ite = self.true_ite()?;
        Some(ite.iter().sum::<f64>() / ite.len() as f64)
    }

    pub fn subset(&self, idx: &[usize]) -> CausalDataset {
        let pick = |v: &Vec<f64>| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        CausalDataset {
            x: self.x.select_rows(idx),
            t: idx.iter().map(|&i| self.t[i]).collect(),
            y_factual: pick(&self.y_factual),
            y_cf: self.y_cf.as_ref().map(pick),
            mu0: self.mu0.as_ref().map(pick),
            mu1: self.mu1.as_ref().map(pick),
            columns: self.columns.clone(),
            source: self.source,
        }
    }

    /// Checks every structural invariant: lengths, binary treatment with both
    /// arms present, and finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.x.rows() != n || self.y_factual.len() != n {
            return Err(Error::Dataset(format!(
                "length mismatch: {} covariate rows, {} treatments, {} outcomes",
                self.x.rows(),
                n,
                self.y_factual.len()
            )));
        }
        if self.columns.len() != self.x.cols() {
            return Err(Error::Dataset(format!(
                "{} column descriptors for {} covariates",
                self.columns.len(),
                self.x.cols()
            )));
        }
        for (name, v) in [("y_cf", &self.y_cf), ("mu0", &self.mu0), ("mu1", &self.mu1)] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(Error::Dataset(format!("{name} has {} entries, expected {n}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Dataset(format!("{name} contains non-finite values")));
                }
            }
        }
        if let Some((i, &t)) = self.t.iter().enumerate().find(|(_, &t)| t > 1) {
            return Err(Error::NonBinaryTreatment {
                index: i,
                value: f64::from(t),
            });
        }
        let (control, treated) = self.arm_counts();
        if control == 0 || treated == 0 {
            return Err(Error::Positivity(format!(
                "{control} control and {treated} treated subjects"
            )));
        }
        if !self.x.is_finite() || self.y_factual.iter().any(|y| !y.is_finite()) {
            return Err(Error::Dataset("non-finite covariate or outcome".into()));
        }
        Ok(())
    }
}

/// Binary if every value is 0 or 1.
pub(crate) fn infer_kind(values: impl IntoIterator<Item = f64>) -> ColumnKind {
    if values.into_iter().all(|v| v == 0.0 || v == 1.0) {
        ColumnKind::Binary
    } else {
        ColumnKind::Continuous
    }
}

pub(crate) fn parse_treatment(v: f64, row: usize, path: &std::path::Path) -> Result<u8> {
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            msg: format!("treatment value {v} is not 0 or 1"),
        })
    }
}

pub(crate) fn parse_field(field: &str, row: usize, col: usize, path: &std::path::Path) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row,
        msg: format!("column {}: cannot parse {field:?} as a number", col + 1),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            msg: format!("column {}: non-finite value", col + 1),
        });
    }
    Ok(v)
}
