//! Causal effect estimation with a variational information bottleneck.
//!
//! An encoder maps covariates to a diagonal-Gaussian latent confounder; two
//! outcome heads and a treatment head read reparameterized samples of it.
//! Training maximizes the factual log-likelihood minus `β·KL` to a standard
//! normal prior, and effects are estimated by intervening on the treatment
//! and averaging the outcome heads over latent draws.

pub mod baselines;
pub mod datasets;
pub mod estimator;
pub mod experiment;
pub mod metrics;
pub mod model;
mod error;
pub mod tensor;

pub use error::{Error, Result};
