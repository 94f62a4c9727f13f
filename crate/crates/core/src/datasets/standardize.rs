use serde::{Deserialize, Serialize};

use super::{CausalDataset, ColumnKind};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

const STD_FLOOR: f64 = 1e-8;

/// Per-column affine map fitted on a training split. Binary columns keep
/// mean 0 and scale 1, i.e. pass through unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
        }
    }

    pub fn fit(x: &Matrix, kinds: &[ColumnKind]) -> Result<Self> {
        if kinds.len() != x.cols() {
            return Err(Error::shape(
                "Standardizer::fit",
                format!("{} columns", x.cols()),
                format!("{} column kinds", kinds.len()),
            ));
        }
        if x.rows() == 0 {
            return Err(Error::Dataset("cannot standardize an empty split".into()));
        }
        let n = x.rows() as f64;
        let mut means = vec![0.0; x.cols()];
        let mut stds = vec![1.0; x.cols()];
        for (j, kind) in kinds.iter().enumerate() {
            if *kind == ColumnKind::Binary {
                continue;
            }
            let col = x.col(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means[j] = mean;
            stds[j] = var.sqrt().max(STD_FLOOR);
        }
        Ok(Standardizer { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.means).zip(&self.stds) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.means).zip(&self.stds) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.dim() {
            return Err(Error::shape(
                "standardize",
                format!("{} columns", x.cols()),
                format!("statistics for {}", self.dim()),
            ));
        }
        Ok(())
    }
}

/// Fits statistics on `train` and applies them to `train` and each of `others`.
pub fn standardize(
    train: &CausalDataset,
    others: &[&CausalDataset],
) -> Result<(CausalDataset, Vec<CausalDataset>, Standardizer)> {
    let stats = Standardizer::fit(&train.x, &train.column_kinds())?;
    let apply = |d: &CausalDataset| -> Result<CausalDataset> {
        let mut out = d.clone();
        out.x = stats.transform(&d.x)?;
        Ok(out)
    };
    let train_t = apply(train)?;
    let others_t = others.iter().map(|d| apply(d)).collect::<Result<Vec<_>>>()?;
    Ok((train_t, others_t, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{Column, Source};
    use crate::tensor::RngStream;

    fn data(n: usize, seed: u64) -> CausalDataset {
        let mut rng = RngStream::new(seed, 0);
        let mut rows = Vec::new();
        for i in 0..n {
            rows.push(vec![
                5.0 + 3.0 * rng.gauss(),
                (i % 2) as f64,
                -2.0 + 0.1 * rng.gauss(),
            ]);
        }
        CausalDataset {
            x: Matrix::from_rows(&rows).unwrap(),
            t: (0..n).map(|i| (i % 3 == 0) as u8).collect(),
            y_factual: vec![0.0; n],
            y_cf: None,
            mu0: None,
            mu1: None,
            columns: vec![
                Column { name: "a".into(), kind: ColumnKind::Continuous },
                Column { name: "b".into(), kind: ColumnKind::Binary },
                Column { name: "c".into(), kind: ColumnKind::Continuous },
            ],
            source: Source::Synthetic,
        }
    }

    #[test]
    fn train_columns_are_centered_and_scaled() {
        let train = data(200, 1);
        let test = data(50, 2);
        let (tr, others, _) = standardize(&train, &[&test]).unwrap();
        for j in [0, 2] {
            let col = tr.x.col(j);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-10);
            assert!((std - 1.0).abs() < 1e-10);
        }
        assert_eq!(tr.x.col(1), train.x.col(1));
        assert_eq!(others[0].x.col(1), test.x.col(1));
    }

    #[test]
    fn round_trip() {
        let d = data(100, 3);
        let s = Standardizer::fit(&d.x, &d.column_kinds()).unwrap();
        let back = s.inverse(&s.transform(&d.x).unwrap()).unwrap();
        for (a, b) in back.data().iter().zip(d.x.data()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn constant_column_uses_floor() {
        let x = Matrix::from_rows(&[[2.0], [2.0], [2.0]]).unwrap();
        let s = Standardizer::fit(&x, &[ColumnKind::Continuous]).unwrap();
        assert_eq!(s.stds[0], STD_FLOOR);
        assert!(s.transform(&x).unwrap().is_finite());
    }
}
