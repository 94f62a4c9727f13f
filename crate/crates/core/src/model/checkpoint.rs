use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::CevibModel;
use crate::error::{Error, Result};
use crate::tensor::Mlp;

const FORMAT: &str = "cevib-checkpoint/1";

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    model: CevibModel,
}

impl CevibModel {
    pub fn to_json(&self) -> Result<String> {
        let env = Envelope {
            format: FORMAT.to_string(),
            model: self.clone(),
        };
        serde_json::to_string(&env).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if env.format != FORMAT {
            return Err(Error::Checkpoint(format!(
                "unsupported format {:?}, expected {FORMAT:?}",
                env.format
            )));
        }
        let model = env.model;
        model.config.validate()?;
        let k = model.config.latent_dim;
        let nets = [
            (&model.encoder, 2 * k),
            (&model.outcome_heads[0], 1),
            (&model.outcome_heads[1], 1),
            (&model.treatment_head, 1),
        ];
        for (net, out) in nets {
            Mlp::new(net.layers().to_vec()).map_err(|e| Error::Checkpoint(e.to_string()))?;
            if net.out_dim() != out {
                return Err(Error::Checkpoint(format!("network output width {} != {out}", net.out_dim())));
            }
        }
        for head in [&model.outcome_heads[0], &model.outcome_heads[1], &model.treatment_head] {
            if head.in_dim() != k {
                return Err(Error::Checkpoint(format!("head input width {} != {k}", head.in_dim())));
            }
        }
        if model.scaling.covariates.dim() != model.input_dim() {
            return Err(Error::Checkpoint("covariate statistics do not match the encoder".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CevibConfig;
    use crate::tensor::{Matrix, RngStream};

    fn model() -> CevibModel {
        let cfg = CevibConfig {
            latent_dim: 3,
            encoder_hidden: vec![5],
            head_hidden: vec![4],
            ..Default::default()
        };
        let mut m = CevibModel::new(cfg, 2, &mut RngStream::new(1, 0)).unwrap();
        m.mark_fitted();
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = CevibModel::load(&path).unwrap();
        assert_eq!(back, m);
        let x = RngStream::new(2, 0).gauss_matrix(4, 2);
        let eps = Matrix::zeros(4, 3);
        let t = [0, 1, 1, 0];
        assert_eq!(m.predict_heads(&x, &t, &eps).unwrap(), back.predict_heads(&x, &t, &eps).unwrap());
    }

    #[test]
    fn wrong_format_rejected() {
        let text = model().to_json().unwrap().replace(FORMAT, "other/9");
        assert!(matches!(CevibModel::from_json(&text), Err(Error::Checkpoint(_))));
        assert!(CevibModel::from_json("{}").is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(CevibModel::load("/nonexistent/m.json"), Err(Error::Io { .. })));
    }
}
