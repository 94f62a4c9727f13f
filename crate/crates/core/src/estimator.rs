//! Monte-Carlo treatment-effect estimates from a fitted model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_latent, CevibModel};
use crate::tensor::{Matrix, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Latent draws per subject.
    pub n_samples: usize,
    /// Add `N(0, s²)` noise to each predicted potential outcome, `s` being
    /// the training outcome scale, instead of using the head means.
    pub noisy_outcomes: bool,
}

impl EstimateOptions {
    pub fn with_samples(n_samples: usize) -> Self {
        EstimateOptions {
            n_samples,
            noisy_outcomes: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub ate: f64,
    pub ite: Vec<f64>,
    pub n_latent_samples: usize,
    pub n_subjects: usize,
}

/// Per-subject and average effects for raw covariates `x`. Both potential
/// outcomes of a subject are evaluated at the same latent draw.
pub fn estimate_effects(
    model: &CevibModel,
    x: &Matrix,
    options: EstimateOptions,
    rng: &mut RngStream,
) -> Result<EffectEstimate> {
    model.ensure_fitted()?;
    if options.n_samples == 0 {
        return Err(Error::Config("at least one latent sample is required".into()));
    }
    let n = x.rows();
    if n == 0 {
        return Err(Error::Dataset("no subjects to estimate effects for".into()));
    }
    let post = model.encode_raw(x)?;
    let k = model.latent_dim();
    let std = model.scaling().outcome_std;
    let mut sums = vec![0.0; n];
    for _ in 0..options.n_samples {
        let z = sample_latent(&post, &rng.gauss_matrix(n, k))?;
        let (y0, y1) = model.potential_outcomes(&z)?;
        for (i, s) in sums.iter_mut().enumerate() {
            let mut d = y1[i] - y0[i];
            if options.noisy_outcomes {
                d += std * (rng.gauss() - rng.gauss());
            }
            *s += d;
        }
    }
    let ite: Vec<f64> = sums.iter().map(|s| s / options.n_samples as f64).collect();
    let ate = ite.iter().sum::<f64>() / n as f64;
    Ok(EffectEstimate {
        ate,
        ite,
        n_latent_samples: options.n_samples,
        n_subjects: n,
    })
}

pub fn estimate_ite(model: &CevibModel, x: &Matrix, n_samples: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    Ok(estimate_effects(model, x, EstimateOptions::with_samples(n_samples), rng)?.ite)
}

pub fn estimate_ate(model: &CevibModel, x: &Matrix, n_samples: usize, rng: &mut RngStream) -> Result<f64> {
    Ok(estimate_effects(model, x, EstimateOptions::with_samples(n_samples), rng)?.ate)
}
