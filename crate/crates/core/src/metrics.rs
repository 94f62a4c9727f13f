//! Effect-estimation error metrics and replication-level aggregation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold below which a true effect is treated as zero by
/// `rel_pehe`.
pub const MIN_EFFECT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Within,
    Out,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Within => "within",
            Scope::Out => "out",
        })
    }
}

impl std::str::FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "within" => Ok(Scope::Within),
            "out" => Ok(Scope::Out),
            other => Err(Error::Metric(format!("unknown scope {other:?}"))),
        }
    }
}

fn check(ite_true: &[f64], ite_pred: &[f64]) -> Result<()> {
    if ite_true.len() != ite_pred.len() {
        return Err(Error::shape(
            "metric",
            format!("{} true effects", ite_true.len()),
            format!("{} predictions", ite_pred.len()),
        ));
    }
    if ite_true.is_empty() {
        return Err(Error::Metric("no subjects".into()));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `|mean(ite_true) - mean(ite_pred)|`.
pub fn eps_ate(ite_true: &[f64], ite_pred: &[f64]) -> Result<f64> {
    check(ite_true, ite_pred)?;
    Ok((mean(ite_true) - mean(ite_pred)).abs())
}

/// Mean squared ITE error and its square root.
pub fn pehe(ite_true: &[f64], ite_pred: &[f64]) -> Result<(f64, f64)> {
    check(ite_true, ite_pred)?;
    let sq = ite_true.iter().zip(ite_pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / ite_true.len() as f64;
    Ok((sq, sq.sqrt()))
}

/// Mean squared relative ITE error over subjects with `|true| >= min_effect`,
/// with the number of subjects left out.
pub fn rel_pehe(ite_true: &[f64], ite_pred: &[f64], min_effect: f64) -> Result<(f64, usize)> {
    check(ite_true, ite_pred)?;
    let mut total = 0.0;
    let mut kept = 0usize;
    for (&a, &b) in ite_true.iter().zip(ite_pred) {
        if a.abs() >= min_effect {
            total += ((a - b) / a).powi(2);
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::Metric(format!(
            "relative PEHE undefined: all {} true effects are below {min_effect:e}",
            ite_true.len()
        )));
    }
    Ok((total / kept as f64, ite_true.len() - kept))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub eps_ate: f64,
    pub pehe: f64,
    pub sqrt_pehe: f64,
    /// `None` when every true effect is below the exclusion threshold.
    pub rel_pehe: Option<f64>,
    pub n_subjects: usize,
    pub n_excluded_rel: usize,
    pub scope: Scope,
}

impl EvalReport {
    pub fn evaluate(ite_true: &[f64], ite_pred: &[f64], scope: Scope) -> Result<Self> {
        let eps = eps_ate(ite_true, ite_pred)?;
        let (p, sp) = pehe(ite_true, ite_pred)?;
        let (rel, excluded) = match rel_pehe(ite_true, ite_pred, MIN_EFFECT) {
            Ok((v, n)) => (Some(v), n),
            Err(Error::Metric(_)) => (None, ite_true.len()),
            Err(e) => return Err(e),
        };
        Ok(EvalReport {
            eps_ate: eps,
            pehe: p,
            sqrt_pehe: sp,
            rel_pehe: rel,
            n_subjects: ite_true.len(),
            n_excluded_rel: excluded,
            scope,
        })
    }

    /// Natural log of the relative PEHE.
    pub fn log_rel_pehe(&self) -> Option<f64> {
        self.rel_pehe.map(f64::ln)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Metric("cannot aggregate zero values".into()));
        }
        let n = values.len();
        let m = mean(values);
        let std = if n > 1 {
            (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(MeanStd { mean: m, std, n })
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scope: Scope,
    pub eps_ate: MeanStd,
    pub pehe: MeanStd,
    pub sqrt_pehe: MeanStd,
    /// Over the reports where relative PEHE is defined.
    pub rel_pehe: Option<MeanStd>,
}

pub fn aggregate(reports: &[EvalReport]) -> Result<Aggregate> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Metric("cannot aggregate an empty list of reports".into()))?;
    if let Some(r) = reports.iter().find(|r| r.scope != first.scope) {
        return Err(Error::Metric(format!("mixed scopes: {} and {}", first.scope, r.scope)));
    }
    let pick = |f: fn(&EvalReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
    let rel: Vec<f64> = reports.iter().filter_map(|r| r.rel_pehe).collect();
    Ok(Aggregate {
        scope: first.scope,
        eps_ate: pick(|r| r.eps_ate)?,
        pehe: pick(|r| r.pehe)?,
        sqrt_pehe: pick(|r| r.sqrt_pehe)?,
        rel_pehe: if rel.is_empty() { None } else { Some(MeanStd::of(&rel)?) },
    })
}
