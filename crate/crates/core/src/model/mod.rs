//! The variational confounder model: encoder, outcome and treatment heads,
//! objective with exact gradients, training and checkpoints.

mod checkpoint;
mod config;
mod network;
mod train;

pub use config::{CevibConfig, OutcomeScaling};
pub use network::{loss_kl, sample_latent, Batch, CevibModel, LatentPosterior, ObjectiveValue, Scaling};
pub use train::{EpochStats, TrainingTrace};
