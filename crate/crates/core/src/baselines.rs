//! Least-squares reference estimators: one regression with the treatment as
//! a feature (`Ols1`) and one regression per arm (`Ols2`).

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datasets::CausalDataset;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Ridge added to the normal equations, as `sqrt(RIDGE)·I` rows under QR.
pub const RIDGE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OlsVariant {
    Ols1,
    Ols2,
}

impl fmt::Display for OlsVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OlsVariant::Ols1 => "ols1",
            OlsVariant::Ols2 => "ols2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OlsModel {
    /// Coefficients over `[1, x, t]`.
    Ols1 { coef: Vec<f64> },
    /// Coefficients over `[1, x]` for the control and treated arms.
    Ols2 { control: Vec<f64>, treated: Vec<f64> },
}

impl OlsModel {
    pub fn variant(&self) -> OlsVariant {
        match self {
            OlsModel::Ols1 { .. } => OlsVariant::Ols1,
            OlsModel::Ols2 { .. } => OlsVariant::Ols2,
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            OlsModel::Ols1 { coef } => coef.len() - 2,
            OlsModel::Ols2 { control, .. } => control.len() - 1,
        }
    }
}

/// Ridge-regularized least squares via QR of the augmented system.
fn lstsq(design: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = design.shape();
    let mut a = DMatrix::zeros(n + p, p);
    a.view_mut((0, 0), (n, p)).copy_from(design);
    for j in 0..p {
        a[(n + j, j)] = RIDGE.sqrt();
    }
    let mut b = DVector::zeros(n + p);
    b.rows_mut(0, n).copy_from_slice(y);
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    let coef = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Dataset("least-squares system is singular".into()))?;
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::Dataset("least-squares solution is not finite".into()));
    }
    Ok(coef.iter().copied().collect())
}

fn design(x: &Matrix, rows: &[usize], t: Option<&[u8]>) -> DMatrix<f64> {
    let d = x.cols();
    let extra = usize::from(t.is_some());
    DMatrix::from_fn(rows.len(), d + 1 + extra, |r, c| {
        let i = rows[r];
        match c {
            0 => 1.0,
            c if c <= d => x.get(i, c - 1),
            _ => f64::from(t.expect("treatment column requested")[i]),
        }
    })
}

fn predict(coef: &[f64], row: &[f64]) -> f64 {
    coef[0] + coef[1..].iter().zip(row).map(|(c, v)| c * v).sum::<f64>()
}

pub fn fit_ols(variant: OlsVariant, data: &CausalDataset) -> Result<OlsModel> {
    if data.is_empty() {
        return Err(Error::Dataset("cannot fit on an empty dataset".into()));
    }
    let all: Vec<usize> = (0..data.len()).collect();
    match variant {
        OlsVariant::Ols1 => Ok(OlsModel::Ols1 {
            coef: lstsq(&design(&data.x, &all, Some(&data.t)), &data.y_factual)?,
        }),
        OlsVariant::Ols2 => {
            let arm = |a: u8| -> Result<Vec<f64>> {
                let rows: Vec<usize> = all.iter().copied().filter(|&i| data.t[i] == a).collect();
                if rows.is_empty() {
                    return Err(Error::Positivity(format!("no subjects with treatment {a}")));
                }
                let y: Vec<f64> = rows.iter().map(|&i| data.y_factual[i]).collect();
                lstsq(&design(&data.x, &rows, None), &y)
            };
            Ok(OlsModel::Ols2 {
                control: arm(0)?,
                treated: arm(1)?,
            })
        }
    }
}

/// Predicted per-subject effects for covariates `x`.
pub fn ols_ite(model: &OlsModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != model.input_dim() {
        return Err(Error::shape(
            "ols_ite",
            format!("{} fitted covariates", model.input_dim()),
            format!("{} columns", x.cols()),
        ));
    }
    Ok(match model {
        OlsModel::Ols1 { coef } => vec![coef[coef.len() - 1]; x.rows()],
        OlsModel::Ols2 { control, treated } => (0..x.rows())
            .map(|i| predict(treated, x.row(i)) - predict(control, x.row(i)))
            .collect(),
    })
}
