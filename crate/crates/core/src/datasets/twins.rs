use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ihdp::csv_error;
use super::{infer_kind, parse_field, parse_treatment, CausalDataset, Column, Source};
use crate::error::{Error, Result};
use crate::tensor::{sigmoid, Matrix, RngStream};

/// Column naming for the Twins table. One row per twin pair; `y0` is the
/// lighter twin's first-year mortality and `y1` the heavier twin's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwinsOptions {
    pub y0_column: String,
    pub y1_column: String,
    /// Which twin is observed (1 = heavier). When the column is absent the
    /// assignment is drawn from a weakly covariate-dependent logistic model
    /// seeded by `assignment_seed`.
    pub treatment_column: String,
    pub assignment_seed: u64,
    /// Columns ignored entirely (ids, row indices).
    pub drop_columns: Vec<String>,
}

impl Default for TwinsOptions {
    fn default() -> Self {
        TwinsOptions {
            y0_column: "y0".into(),
            y1_column: "y1".into(),
            treatment_column: "t".into(),
            assignment_seed: 0,
            drop_columns: vec![String::new()],
        }
    }
}

/// Loads a headered Twins CSV. The co-twin's recorded outcome is the
/// counterfactual, so `y_cf` is always populated.
pub fn load_twins(path: impl AsRef<Path>, opts: &TwinsOptions) -> Result<CausalDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let missing = |name: &str| Error::Parse {
        path: path.to_path_buf(),
        row: 0,
        msg: format!("header lacks column {name:?}"),
    };
    let y0_col = find(&opts.y0_column).ok_or_else(|| missing(&opts.y0_column))?;
    let y1_col = find(&opts.y1_column).ok_or_else(|| missing(&opts.y1_column))?;
    let t_col = find(&opts.treatment_column);
    let cov_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != y0_col && c != y1_col && Some(c) != t_col)
        .filter(|&c| !opts.drop_columns.contains(&headers[c]))
        .collect();

    let mut x = Vec::new();
    let mut y0 = Vec::new();
    let mut y1 = Vec::new();
    let mut t = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row,
            msg: e.to_string(),
        })?;
        if rec.len() != headers.len() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                row,
                expected: headers.len(),
                found: rec.len(),
            });
        }
        let get = |c: usize| parse_field(&rec[c], row, c, path);
        for &c in &cov_cols {
            x.push(get(c)?);
        }
        for (col, out) in [(y0_col, &mut y0), (y1_col, &mut y1)] {
            let v = get(col)?;
            if v != 0.0 && v != 1.0 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    msg: format!("mortality outcome {v} is not 0 or 1"),
                });
            }
            out.push(v);
        }
        if let Some(c) = t_col {
            t.push(parse_treatment(get(c)?, row, path)?);
        }
    }

    let n = y0.len();
    let x = Matrix::from_vec(n, cov_cols.len(), x)?;
    if t_col.is_none() {
        t = assign_treatment(&x, opts.assignment_seed);
    }
    let columns = cov_cols
        .iter()
        .enumerate()
        .map(|(j, &c)| Column {
            name: headers[c].clone(),
            kind: infer_kind(x.col(j)),
        })
        .collect();
    let (y_factual, y_cf) = t
        .iter()
        .zip(y0.iter().zip(&y1))
        .map(|(&ti, (&a, &b))| if ti == 1 { (b, a) } else { (a, b) })
        .unzip();
    let data = CausalDataset {
        x,
        t,
        y_factual,
        y_cf: Some(y_cf),
        mu0: None,
        mu1: None,
        columns,
        source: Source::Twins,
    };
    data.validate()?;
    Ok(data)
}

/// p = sigmoid(x·w + noise) with w ~ U(-0.01, 0.01), rescaled to mean 1/2 and
/// capped at 1; t ~ Bernoulli(p).
fn assign_treatment(x: &Matrix, seed: u64) -> Vec<u8> {
    let mut rng = RngStream::new(seed, 0);
    let w: Vec<f64> = (0..x.cols()).map(|_| rng.uniform(-0.01, 0.01)).collect();
    let p: Vec<f64> = (0..x.rows())
        .map(|r| {
            let s: f64 = x.row(r).iter().zip(&w).map(|(a, b)| a * b).sum();
            sigmoid(s + 0.01 * rng.gauss())
        })
        .collect();
    let mean = p.iter().sum::<f64>() / p.len().max(1) as f64;
    p.iter()
        .map(|&pi| u8::from(rng.bernoulli((pi / (2.0 * mean)).min(1.0))))
        .collect()
}
