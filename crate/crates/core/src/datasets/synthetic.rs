use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{CausalDataset, Column, ColumnKind, Source};
use crate::error::{Error, Result};
use crate::tensor::{Matrix, RngStream};

/// Two Gaussian arms sharing a random covariance, separated by a mean shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_control: usize,
    pub n_treated: usize,
    pub dim: usize,
    /// Treated arm mean is `mu` in every coordinate.
    pub mu: f64,
    pub covariance_seed: u64,
    pub outcome_seed: u64,
    /// Eigenvalue floor applied when symmetrizing the raw covariance.
    pub psd_jitter: f64,
    /// Variance of the additive outcome noise.
    pub noise_var: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_control: 5000,
            n_treated: 2500,
            dim: 10,
            mu: 0.0,
            covariance_seed: 0,
            outcome_seed: 0,
            psd_jitter: 1e-3,
            noise_var: 0.1,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_control == 0 || self.n_treated == 0 || self.dim == 0 {
            return Err(Error::Config("synthetic sample counts and dimension must be positive".into()));
        }
        if !self.mu.is_finite() || !(self.noise_var >= 0.0) || !(self.psd_jitter >= 0.0) {
            return Err(Error::Config("synthetic mu, noise_var and psd_jitter must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub dataset: CausalDataset,
    /// KL(treated arm ‖ control arm), exact.
    pub kl: f64,
    /// Repaired shared covariance.
    pub covariance: Matrix,
    /// `dim × 2` outcome weights; column 0 gives the control outcome.
    pub weights: Matrix,
    pub config: SynthConfig,
}

/// Eigen-decomposition of `0.5 (a + aᵀ)` with eigenvalues clipped from below at `floor`.
pub fn repair_psd(a: &Matrix, floor: f64) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::shape("repair_psd", format!("{}x{}", n, a.cols()), "square"));
    }
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
    let eig = SymmetricEigen::new(sym);
    let values: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(floor)).collect();
    if values.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::Generation(
            "covariance is singular after eigenvalue repair; use a positive psd_jitter".into(),
        ));
    }
    let vectors = Matrix::from_vec(n, n, (0..n * n).map(|k| eig.eigenvectors[(k / n, k % n)]).collect())?;
    let mut repaired = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s: f64 = (0..n).map(|k| vectors.get(i, k) * values[k] * vectors.get(j, k)).sum();
            repaired.set(i, j, s);
        }
    }
    Ok((repaired, values, vectors))
}

/// KL(N(mu·1, C) ‖ N(0, C)) = ½ mu² 1ᵀ C⁻¹ 1.
pub fn shift_kl(covariance: &Matrix, mu: f64) -> Result<f64> {
    let (_, values, vectors) = repair_psd(covariance, 0.0)?;
    Ok(shift_kl_eigen(&values, &vectors, mu))
}

fn shift_kl_eigen(values: &[f64], vectors: &Matrix, mu: f64) -> f64 {
    let n = values.len();
    let quad: f64 = (0..n)
        .map(|k| {
            let proj: f64 = (0..n).map(|i| vectors.get(i, k)).sum();
            proj * proj / values[k]
        })
        .sum();
    0.5 * mu * mu * quad
}

/// Draws control subjects from N(0, C) and treated subjects from N(mu·1, C),
/// with `C = 0.5 (Σ + Σᵀ)`, `Σ ~ U(-1, 1)` (seeded by `covariance_seed`) and
/// eigenvalues clipped at `psd_jitter`. Potential outcomes are the two columns
/// of `Wᵀx + ε` with `W ~ U(-1, 1)` (seeded by `outcome_seed`) and
/// `ε ~ N(0, noise_var·I)`. Subject draws and noise come from `rng`.
pub fn generate_synthetic(cfg: &SynthConfig, rng: &mut RngStream) -> Result<SyntheticData> {
    cfg.validate()?;
    let d = cfg.dim;
    let raw = RngStream::new(cfg.covariance_seed, 0).uniform_matrix(d, d, -1.0, 1.0);
    let (covariance, values, vectors) = repair_psd(&raw, cfg.psd_jitter)?;
    let weights = RngStream::new(cfg.outcome_seed, 0).uniform_matrix(d, 2, -1.0, 1.0);

    // x = m + V·diag(√λ)·ε
    let mut factor = vectors.clone();
    for i in 0..d {
        for k in 0..d {
            factor.set(i, k, vectors.get(i, k) * values[k].sqrt());
        }
    }
    let n = cfg.n_control + cfg.n_treated;
    let eps = rng.gauss_matrix(n, d);
    let mut x = eps.matmul_t(&factor)?;
    let mut t = vec![0u8; n];
    for (r, ti) in t.iter_mut().enumerate().skip(cfg.n_control) {
        *ti = 1;
        x.row_mut(r).iter_mut().for_each(|v| *v += cfg.mu);
    }

    let means = x.matmul(&weights)?;
    let noise_sd = cfg.noise_var.sqrt();
    let mut mu0 = Vec::with_capacity(n);
    let mut mu1 = Vec::with_capacity(n);
    let mut yf = Vec::with_capacity(n);
    let mut ycf = Vec::with_capacity(n);
    for (r, &ti) in t.iter().enumerate() {
        let (m0, m1) = (means.get(r, 0), means.get(r, 1));
        let y0 = m0 + noise_sd * rng.gauss();
        let y1 = m1 + noise_sd * rng.gauss();
        mu0.push(m0);
        mu1.push(m1);
        if ti == 1 {
            yf.push(y1);
            ycf.push(y0);
        } else {
            yf.push(y0);
            ycf.push(y1);
        }
    }

    let dataset = CausalDataset {
        x,
        t,
        y_factual: yf,
        y_cf: Some(ycf),
        mu0: Some(mu0),
        mu1: Some(mu1),
        columns: (0..d)
            .map(|j| Column {
                name: format!("x{}", j + 1),
                kind: ColumnKind::Continuous,
            })
            .collect(),
        source: Source::Synthetic,
    };
    dataset.validate()?;
    Ok(SyntheticData {
        dataset,
        kl: shift_kl_eigen(&values, &vectors, cfg.mu),
        covariance,
        weights,
        config: cfg.clone(),
    })
}

#[derive(Serialize)]
struct ExportMeta<'a> {
    columns: Vec<String>,
    config: &'a SynthConfig,
    sample_seed: u64,
    sample_stream: u64,
    kl: f64,
    true_ate: f64,
}

/// Writes `[t, y_factual, y_cf, mu0, mu1, x1..]` without a header and a JSON
/// sidecar (`<path>.meta.json`) recording seeds, shift and KL.
pub fn export_synthetic(data: &SyntheticData, sample_rng: &RngStream, path: &Path) -> Result<PathBuf> {
    let ds = &data.dataset;
    let mut out = String::new();
    let ycf = ds.y_cf.as_ref().expect("generated data carries counterfactuals");
    let mu0 = ds.mu0.as_ref().expect("generated data carries mu0");
    let mu1 = ds.mu1.as_ref().expect("generated data carries mu1");
    for i in 0..ds.len() {
        let mut fields = vec![
            ds.t[i].to_string(),
            ds.y_factual[i].to_string(),
            ycf[i].to_string(),
            mu0[i].to_string(),
            mu1[i].to_string(),
        ];
        fields.extend(ds.x.row(i).iter().map(|v| v.to_string()));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;

    let mut columns: Vec<String> = ["t", "y_factual", "y_cf", "mu0", "mu1"].map(String::from).to_vec();
    columns.extend(ds.columns.iter().map(|c| c.name.clone()));
    let meta = ExportMeta {
        columns,
        config: &data.config,
        sample_seed: sample_rng.seed(),
        sample_stream: sample_rng.stream(),
        kl: data.kl,
        true_ate: ds.true_ate().unwrap_or(f64::NAN),
    };
    let mut meta_path = path.as_os_str().to_owned();
    meta_path.push(".meta.json");
    let meta_path = PathBuf::from(meta_path);
    let mut f = fs::File::create(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    f.write_all(json.as_bytes()).map_err(|e| Error::io(&meta_path, e))?;
    Ok(meta_path)
}
