use std::collections::HashMap;
use std::path::Path;

use super::ihdp::csv_error;
use super::{infer_kind, parse_field, parse_treatment, CausalDataset, Column, Source};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

struct Table {
    headers: Vec<String>,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// Reads a headered CSV whose first column is a string id.
fn read_keyed(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, expected_len, .. } => Error::Format {
                path: path.to_path_buf(),
                row,
                expected: *expected_len as usize,
                found: *len as usize,
            },
            _ => Error::Parse {
                path: path.to_path_buf(),
                row,
                msg: e.to_string(),
            },
        })?;
        ids.push(rec[0].trim().to_string());
        rows.push(
            rec.iter()
                .enumerate()
                .skip(1)
                .map(|(c, f)| parse_field(f, row, c, path))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(Table { headers, ids, rows })
}

fn column(table: &Table, name: &str, path: &Path) -> Result<usize> {
    table
        .headers
        .iter()
        .position(|h| h == name)
        .filter(|&c| c > 0)
        .map(|c| c - 1)
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            msg: format!("header lacks column {name:?}"),
        })
}

/// Loads one data-generating process from an ACIC 2018 (LBIDD) scaling
/// folder: `x.csv` keyed by `sample_id`, `factuals/{dgp}.csv` with
/// `sample_id,z,y` and, when present, `counterfactuals/{dgp}_cf.csv` with
/// `sample_id,y0,y1`. Subjects follow the factual file's order.
pub fn load_acic(dir: impl AsRef<Path>, dgp_id: &str) -> Result<CausalDataset> {
    let dir = dir.as_ref();
    let x_path = dir.join("x.csv");
    let f_path = dir.join("factuals").join(format!("{dgp_id}.csv"));
    let cf_path = dir.join("counterfactuals").join(format!("{dgp_id}_cf.csv"));

    let covs = read_keyed(&x_path)?;
    let factual = read_keyed(&f_path)?;
    let z_col = column(&factual, "z", &f_path)?;
    let y_col = column(&factual, "y", &f_path)?;

    let by_id: HashMap<&str, usize> = covs.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let missing: Vec<String> = factual
        .ids
        .iter()
        .filter(|id| !by_id.contains_key(id.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::Join { missing });
    }

    let n = factual.ids.len();
    let d = covs.headers.len() - 1;
    let mut x = Vec::with_capacity(n * d);
    let mut t = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for (row, (id, vals)) in factual.ids.iter().zip(&factual.rows).enumerate() {
        x.extend_from_slice(&covs.rows[by_id[id.as_str()]]);
        t.push(parse_treatment(vals[z_col], row + 1, &f_path)?);
        y.push(vals[y_col]);
    }
    let x = Matrix::from_vec(n, d, x)?;

    let (mut mu0, mut mu1, mut y_cf) = (None, None, None);
    if cf_path.exists() {
        let cf = read_keyed(&cf_path)?;
        let c0 = column(&cf, "y0", &cf_path)?;
        let c1 = column(&cf, "y1", &cf_path)?;
        let cf_by_id: HashMap<&str, usize> = cf.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let missing: Vec<String> = factual
            .ids
            .iter()
            .filter(|id| !cf_by_id.contains_key(id.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::Join { missing });
        }
        let rows: Vec<&Vec<f64>> = factual.ids.iter().map(|id| &cf.rows[cf_by_id[id.as_str()]]).collect();
        let p0: Vec<f64> = rows.iter().map(|r| r[c0]).collect();
        let p1: Vec<f64> = rows.iter().map(|r| r[c1]).collect();
        y_cf = Some(t.iter().enumerate().map(|(i, &ti)| if ti == 1 { p0[i] } else { p1[i] }).collect());
        mu0 = Some(p0);
        mu1 = Some(p1);
    }

    let columns = (0..d)
        .map(|j| Column {
            name: covs.headers[j + 1].clone(),
            kind: infer_kind(x.col(j)),
        })
        .collect();
    let data = CausalDataset {
        x,
        t,
        y_factual: y,
        y_cf,
        mu0,
        mu1,
        columns,
        source: Source::Acic,
    };
    data.validate()?;
    Ok(data)
}
