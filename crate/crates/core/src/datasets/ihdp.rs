use std::path::{Path, PathBuf};

use super::{parse_field, parse_treatment, CausalDataset, Column, ColumnKind, Source};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const IHDP_COVARIATES: usize = 25;
/// The first six covariates are continuous, the remaining 19 binary.
pub const IHDP_CONTINUOUS: usize = 6;
const LEADING: usize = 5;

/// Loads replicate `file_index` (`ihdp_npci_{index}.csv`) from `dir`.
pub fn load_ihdp(dir: impl AsRef<Path>, file_index: usize) -> Result<CausalDataset> {
    load_ihdp_file(ihdp_path(dir.as_ref(), file_index))
}

pub(crate) fn ihdp_path(dir: &Path, file_index: usize) -> PathBuf {
    dir.join(format!("ihdp_npci_{file_index}.csv"))
}

/// Reads one headerless replicate with columns
/// `t, y_factual, y_cfactual, mu0, mu1, x1..x25`.
pub fn load_ihdp_file(path: impl AsRef<Path>) -> Result<CausalDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let width = LEADING + IHDP_COVARIATES;
    let mut t = Vec::new();
    let mut yf = Vec::new();
    let mut ycf = Vec::new();
    let mut mu0 = Vec::new();
    let mut mu1 = Vec::new();
    let mut x = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row,
            msg: e.to_string(),
        })?;
        if rec.len() != width {
            return Err(Error::Format {
                path: path.to_path_buf(),
                row,
                expected: width,
                found: rec.len(),
            });
        }
        let vals = rec
            .iter()
            .enumerate()
            .map(|(c, f)| parse_field(f, row, c, path))
            .collect::<Result<Vec<_>>>()?;
        t.push(parse_treatment(vals[0], row, path)?);
        yf.push(vals[1]);
        ycf.push(vals[2]);
        mu0.push(vals[3]);
        mu1.push(vals[4]);
        x.extend_from_slice(&vals[LEADING..]);
    }
    let n = t.len();
    let columns = (0..IHDP_COVARIATES)
        .map(|j| Column {
            name: format!("x{}", j + 1),
            kind: if j < IHDP_CONTINUOUS {
                ColumnKind::Continuous
            } else {
                ColumnKind::Binary
            },
        })
        .collect();
    let data = CausalDataset {
        x: Matrix::from_vec(n, IHDP_COVARIATES, x)?,
        t,
        y_factual: yf,
        y_cf: Some(ycf),
        mu0: Some(mu0),
        mu1: Some(mu1),
        columns,
        source: Source::Ihdp,
    };
    data.validate()?;
    Ok(data)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            msg: format!("{other:?}"),
        },
    }
}
