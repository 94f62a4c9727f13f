use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture and training settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CevibConfig {
    /// Dimension K of the latent confounder.
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub head_hidden: Vec<usize>,
    /// Weight of the KL term.
    pub beta: f64,
    /// Reparameterized draws per subject per training step.
    pub mc_samples_train: usize,
    /// Latent draws per subject when estimating effects.
    pub mc_samples_eval: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    pub sigma_floor: f64,
    pub outcome_scaling: OutcomeScaling,
}

/// Whether factual outcomes are standardized before training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeScaling {
    /// Standardize unless every outcome is 0 or 1.
    Auto,
    Always,
    Never,
}

impl Default for CevibConfig {
    fn default() -> Self {
        CevibConfig {
            latent_dim: 20,
            encoder_hidden: vec![200, 200],
            head_hidden: vec![100, 100],
            beta: 1e-3,
            mc_samples_train: 1,
            mc_samples_eval: 100,
            learning_rate: 1e-3,
            epochs: 300,
            batch_size: 64,
            early_stop_patience: 20,
            sigma_floor: 1e-6,
            outcome_scaling: OutcomeScaling::Auto,
        }
    }
}

impl CevibConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.latent_dim == 0 {
            return fail("latent_dim must be at least 1");
        }
        if self.mc_samples_train == 0 || self.mc_samples_eval == 0 {
            return fail("Monte-Carlo sample counts must be at least 1");
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return fail("beta must be finite and non-negative");
        }
        if !(self.sigma_floor > 0.0) {
            return fail("sigma_floor must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.encoder_hidden.contains(&0) || self.head_hidden.contains(&0) {
            return fail("hidden layer widths must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        CevibConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        for cfg in [
            CevibConfig { latent_dim: 0, ..Default::default() },
            CevibConfig { beta: -1.0, ..Default::default() },
            CevibConfig { mc_samples_train: 0, ..Default::default() },
            CevibConfig { sigma_floor: 0.0, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: CevibConfig = toml::from_str("beta = 0.5\nlatent_dim = 4").unwrap();
        assert_eq!(cfg.beta, 0.5);
        assert_eq!(cfg.latent_dim, 4);
        assert_eq!(cfg.head_hidden, vec![100, 100]);
    }
}
