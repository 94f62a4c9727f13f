use serde::{Deserialize, Serialize};

use super::network::{Batch, CevibModel, Scaling};
use super::OutcomeScaling;
use crate::datasets::{CausalDataset, Standardizer};
use crate::error::{Error, Result};
use crate::tensor::{AdamConfig, AdamState, Matrix, RngStream};

const OUTCOME_STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean minibatch objective over the epoch.
    pub train_loss: f64,
    /// Objective on the validation split with fixed noise.
    pub val_loss: f64,
    /// Mean per-subject KL on the validation split.
    pub val_kl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were restored.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingTrace {
    pub fn best(&self) -> Option<&EpochStats> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }
}

/// A split converted to model units.
struct Prepared {
    x: Matrix,
    t: Vec<f64>,
    y: Vec<f64>,
}

impl Prepared {
    fn new(data: &CausalDataset, scaling: &Scaling) -> Result<Self> {
        Ok(Prepared {
            x: scaling.covariates.transform(&data.x)?,
            t: data.treatment_f64(),
            y: data.y_factual.iter().map(|&y| scaling.outcome_to_model(y)).collect(),
        })
    }

    fn batch(&self) -> Batch<'_> {
        Batch {
            x: &self.x,
            t: &self.t,
            y: &self.y,
        }
    }

    fn select(&self, idx: &[usize]) -> Prepared {
        Prepared {
            x: self.x.select_rows(idx),
            t: idx.iter().map(|&i| self.t[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

fn fit_scaling(train: &CausalDataset, mode: OutcomeScaling) -> Result<Scaling> {
    let covariates = Standardizer::fit(&train.x, &train.column_kinds())?;
    let scale = match mode {
        OutcomeScaling::Always => true,
        OutcomeScaling::Never => false,
        OutcomeScaling::Auto => !train.outcome_is_binary(),
    };
    let (outcome_mean, outcome_std) = if scale {
        let y = &train.y_factual;
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt().max(OUTCOME_STD_FLOOR))
    } else {
        (0.0, 1.0)
    };
    Ok(Scaling {
        covariates,
        outcome_mean,
        outcome_std,
    })
}

impl CevibModel {
    /// Trains with Adam on `train`, early-stopping on the validation
    /// objective, and leaves the best validation parameters in place.
    pub fn fit(&mut self, train: &CausalDataset, val: &CausalDataset, rng: &mut RngStream) -> Result<TrainingTrace> {
        self.config.validate()?;
        for (name, d) in [("training", train), ("validation", val)] {
            if d.dim() != self.input_dim() {
                return Err(Error::shape(
                    "fit",
                    format!("{} model inputs", self.input_dim()),
                    format!("{} {name} covariates", d.dim()),
                ));
            }
            if d.is_empty() {
                return Err(Error::Dataset(format!("{name} split is empty")));
            }
        }
        let (control, treated) = train.arm_counts();
        if control == 0 || treated == 0 {
            return Err(Error::Positivity(format!(
                "training split has {control} control and {treated} treated subjects"
            )));
        }

        let scaling = fit_scaling(train, self.config.outcome_scaling)?;
        let tr = Prepared::new(train, &scaling)?;
        let va = Prepared::new(val, &scaling)?;
        self.scaling = scaling;

        let k = self.config.latent_dim;
        let m = self.config.mc_samples_train;
        let val_eps: Vec<Matrix> = (0..m).map(|_| rng.gauss_matrix(va.x.rows(), k)).collect();

        let layout = self.param_layout();
        let mut params = self.params();
        let mut adam = AdamState::new(AdamConfig::with_learning_rate(self.config.learning_rate), params.len());
        let mut best = (f64::INFINITY, 0usize, params.clone());
        let mut epochs = Vec::new();
        let mut since_best = 0;
        let mut stopped_early = false;

        for epoch in 0..self.config.epochs {
            let order = rng.permutation(tr.x.rows());
            let mut weighted = 0.0;
            for chunk in order.chunks(self.config.batch_size) {
                let part = tr.select(chunk);
                let eps: Vec<Matrix> = (0..m).map(|_| rng.gauss_matrix(chunk.len(), k)).collect();
                let (value, grad) = self.objective_and_gradient(&part.batch(), &eps)?;
                if !value.loss.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        detail: format!("minibatch objective is {}", value.loss),
                    });
                }
                adam.step(&mut params, &grad, &layout)?;
                self.set_params(&params)?;
                weighted += value.loss * chunk.len() as f64;
            }
            let v = self.objective(&va.batch(), &val_eps)?;
            if !v.loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    detail: format!("validation objective is {}", v.loss),
                });
            }
            epochs.push(EpochStats {
                epoch,
                train_loss: weighted / tr.x.rows() as f64,
                val_loss: v.loss,
                val_kl: v.kl,
            });
            if v.loss < best.0 {
                best = (v.loss, epoch, params.clone());
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= self.config.early_stop_patience {
                    stopped_early = true;
                    break;
                }
            }
        }

        if !epochs.is_empty() {
            self.set_params(&best.2)?;
        }
        self.fitted = true;
        Ok(TrainingTrace {
            epochs,
            best_epoch: best.1,
            stopped_early,
        })
    }
}
