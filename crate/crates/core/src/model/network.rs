use serde::{Deserialize, Serialize};

use super::CevibConfig;
use crate::datasets::Standardizer;
use crate::error::{Error, Result};
use crate::tensor::{Activation, ForwardTrace, Matrix, Mlp, ParamLayout, RngStream};

/// Per-subject diagonal Gaussian over the latent confounder.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentPosterior {
    pub mu: Matrix,
    /// Standard deviations, bounded below by the configured floor.
    pub sigma: Matrix,
}

impl LatentPosterior {
    pub fn rows(&self) -> usize {
        self.mu.rows()
    }

    pub fn latent_dim(&self) -> usize {
        self.mu.cols()
    }

    /// KL(p(z|x_n) ‖ N(0, I)) for each subject.
    pub fn kl_per_subject(&self) -> Vec<f64> {
        (0..self.rows())
            .map(|r| {
                self.mu
                    .row(r)
                    .iter()
                    .zip(self.sigma.row(r))
                    .map(|(&m, &s)| {
                        let s2 = s * s;
                        0.5 * (s2 + m * m - 1.0 - s2.ln())
                    })
                    .sum()
            })
            .collect()
    }
}

/// `z = mu + sigma ⊙ eps`.
pub fn sample_latent(post: &LatentPosterior, eps: &Matrix) -> Result<Matrix> {
    post.mu.same_shape(eps, "sample_latent")?;
    let mut z = post.mu.clone();
    for ((z, s), e) in z.data_mut().iter_mut().zip(post.sigma.data()).zip(eps.data()) {
        *z += s * e;
    }
    Ok(z)
}

/// `(β/N) Σ_n KL(p(z|x_n) ‖ N(0, I))`.
pub fn loss_kl(post: &LatentPosterior, beta: f64) -> f64 {
    let kl = post.kl_per_subject();
    if kl.is_empty() {
        return 0.0;
    }
    beta * kl.iter().sum::<f64>() / kl.len() as f64
}

#[inline]
fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// Training-time transforms between raw data and the units the networks see.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub covariates: Standardizer,
    pub outcome_mean: f64,
    pub outcome_std: f64,
}

impl Scaling {
    pub fn identity(dim: usize) -> Self {
        Scaling {
            covariates: Standardizer::identity(dim),
            outcome_mean: 0.0,
            outcome_std: 1.0,
        }
    }

    pub fn outcome_to_model(&self, y: f64) -> f64 {
        (y - self.outcome_mean) / self.outcome_std
    }

    pub fn outcome_from_model(&self, y: f64) -> f64 {
        y * self.outcome_std + self.outcome_mean
    }
}

/// A batch in model units: standardized covariates, treatments as 0.0/1.0
/// and scaled outcomes.
#[derive(Clone, Copy, Debug)]
pub struct Batch<'a> {
    pub x: &'a Matrix,
    pub t: &'a [f64],
    pub y: &'a [f64],
}

impl Batch<'_> {
    fn check(&self) -> Result<()> {
        let n = self.x.rows();
        if self.t.len() != n || self.y.len() != n {
            return Err(Error::shape(
                "batch",
                format!("{n} covariate rows"),
                format!("{} treatments / {} outcomes", self.t.len(), self.y.len()),
            ));
        }
        if n == 0 {
            return Err(Error::Dataset("empty batch".into()));
        }
        if let Some((index, &value)) = self.t.iter().enumerate().find(|(_, &t)| t != 0.0 && t != 1.0) {
            return Err(Error::NonBinaryTreatment { index, value });
        }
        Ok(())
    }
}

/// Components of the training objective for one batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveValue {
    /// Monte-Carlo log-likelihood term; never positive.
    pub l1: f64,
    /// Mean per-subject KL to the prior, before weighting by β.
    pub kl: f64,
    /// `-l1 + β·kl`, the quantity minimized.
    pub loss: f64,
}

/// Encoder to a Gaussian latent confounder, outcome heads `g⁰`, `g¹` and a
/// treatment head `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CevibModel {
    pub(crate) config: CevibConfig,
    pub(crate) encoder: Mlp,
    pub(crate) outcome_heads: [Mlp; 2],
    pub(crate) treatment_head: Mlp,
    pub(crate) scaling: Scaling,
    pub(crate) fitted: bool,
}

struct Pass {
    encoder: ForwardTrace,
    raw_sigma: Matrix,
    post: LatentPosterior,
    heads: [ForwardTrace; 3],
}

impl CevibModel {
    /// Randomly initialized, unfitted model for `input_dim` covariates.
    pub fn new(config: CevibConfig, input_dim: usize, rng: &mut RngStream) -> Result<Self> {
        config.validate()?;
        let (enc, head) = Self::layer_sizes(&config, input_dim);
        let encoder = Mlp::init(&enc, Activation::Elu, Activation::Linear, rng)?;
        let g0 = Mlp::init(&head, Activation::Elu, Activation::Linear, rng)?;
        let g1 = Mlp::init(&head, Activation::Elu, Activation::Linear, rng)?;
        let h = Mlp::init(&head, Activation::Elu, Activation::Sigmoid, rng)?;
        Ok(Self::assemble(config, input_dim, encoder, [g0, g1], h))
    }

    /// Unfitted model with every weight and bias zero.
    pub fn zeroed(config: CevibConfig, input_dim: usize) -> Result<Self> {
        config.validate()?;
        let (enc, head) = Self::layer_sizes(&config, input_dim);
        let encoder = Mlp::zeros(&enc, Activation::Elu, Activation::Linear)?;
        let g0 = Mlp::zeros(&head, Activation::Elu, Activation::Linear)?;
        let g1 = Mlp::zeros(&head, Activation::Elu, Activation::Linear)?;
        let h = Mlp::zeros(&head, Activation::Elu, Activation::Sigmoid)?;
        Ok(Self::assemble(config, input_dim, encoder, [g0, g1], h))
    }

    fn layer_sizes(config: &CevibConfig, input_dim: usize) -> (Vec<usize>, Vec<usize>) {
        let k = config.latent_dim;
        let mut enc = vec![input_dim];
        enc.extend(&config.encoder_hidden);
        enc.push(2 * k);
        let mut head = vec![k];
        head.extend(&config.head_hidden);
        head.push(1);
        (enc, head)
    }

    fn assemble(config: CevibConfig, input_dim: usize, encoder: Mlp, outcome_heads: [Mlp; 2], treatment_head: Mlp) -> Self {
        CevibModel {
            config,
            encoder,
            outcome_heads,
            treatment_head,
            scaling: Scaling::identity(input_dim),
            fitted: false,
        }
    }

    pub fn config(&self) -> &CevibConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.in_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    /// Declares hand-set parameters ready for prediction.
    pub fn mark_fitted(&mut self) {
        self.fitted = true;
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    pub fn set_scaling(&mut self, scaling: Scaling) -> Result<()> {
        if scaling.covariates.dim() != self.input_dim() {
            return Err(Error::shape(
                "set_scaling",
                format!("{} covariates", self.input_dim()),
                format!("statistics for {}", scaling.covariates.dim()),
            ));
        }
        self.scaling = scaling;
        Ok(())
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn encoder_mut(&mut self) -> &mut Mlp {
        &mut self.encoder
    }

    /// `g⁰` for `arm == 0`, `g¹` otherwise.
    pub fn outcome_head(&self, arm: u8) -> &Mlp {
        &self.outcome_heads[usize::from(arm.min(1))]
    }

    pub fn outcome_head_mut(&mut self, arm: u8) -> &mut Mlp {
        &mut self.outcome_heads[usize::from(arm.min(1))]
    }

    pub fn treatment_head(&self) -> &Mlp {
        &self.treatment_head
    }

    pub fn treatment_head_mut(&mut self) -> &mut Mlp {
        &mut self.treatment_head
    }

    fn nets(&self) -> [&Mlp; 4] {
        [&self.encoder, &self.outcome_heads[0], &self.outcome_heads[1], &self.treatment_head]
    }

    pub fn param_count(&self) -> usize {
        self.nets().iter().map(|n| n.param_count()).sum()
    }

    pub fn param_layout(&self) -> ParamLayout {
        let mut layout = ParamLayout::default();
        for (name, net) in ["encoder", "outcome0", "outcome1", "treatment"].iter().zip(self.nets()) {
            net.describe_params(name, &mut layout);
        }
        layout
    }

    /// All trainable parameters, flattened in `param_layout` order.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for net in self.nets() {
            net.flatten_into(&mut out);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::shape(
                "set_params",
                format!("{} parameters", self.param_count()),
                format!("{} values", params.len()),
            ));
        }
        let mut at = self.encoder.load_from(params)?;
        for head in &mut self.outcome_heads {
            at += head.load_from(&params[at..])?;
        }
        self.treatment_head.load_from(&params[at..])?;
        Ok(())
    }

    fn posterior_from(&self, out: &Matrix) -> (LatentPosterior, Matrix) {
        let k = self.config.latent_dim;
        let mu = out.slice_cols(0, k);
        let raw = out.slice_cols(k, 2 * k);
        let floor = self.config.sigma_floor;
        let sigma = raw.map(|v| softplus(v) + floor);
        (LatentPosterior { mu, sigma }, raw)
    }

    /// Posterior over the latent confounder for covariates already in model
    /// units; `sigma = softplus(raw) + sigma_floor`.
    pub fn encode(&self, x: &Matrix) -> Result<LatentPosterior> {
        let out = self.encoder.forward(x)?;
        Ok(self.posterior_from(&out).0)
    }

    /// Applies the stored covariate standardization, then encodes.
    pub fn encode_raw(&self, x_raw: &Matrix) -> Result<LatentPosterior> {
        self.encode(&self.scaling.covariates.transform(x_raw)?)
    }

    fn check_eps(&self, rows: usize, eps: &[Matrix]) -> Result<()> {
        if eps.is_empty() {
            return Err(Error::Config("at least one noise sample is required".into()));
        }
        let k = self.config.latent_dim;
        for e in eps {
            if e.shape() != (rows, k) {
                return Err(Error::shape(
                    "noise sample",
                    format!("{rows}x{k}"),
                    format!("{}x{}", e.rows(), e.cols()),
                ));
            }
        }
        Ok(())
    }

    fn pass(&self, batch: &Batch<'_>, eps: &[Matrix]) -> Result<Pass> {
        batch.check()?;
        self.check_eps(batch.x.rows(), eps)?;
        let encoder = self.encoder.forward_trace(batch.x)?;
        let (post, raw_sigma) = self.posterior_from(encoder.output());
        let z = Matrix::vstack(&eps.iter().map(|e| sample_latent(&post, e)).collect::<Result<Vec<_>>>()?)?;
        let heads = [
            self.outcome_heads[0].forward_trace(&z)?,
            self.outcome_heads[1].forward_trace(&z)?,
            self.treatment_head.forward_trace(&z)?,
        ];
        Ok(Pass { encoder, raw_sigma, post, heads })
    }

    fn l1_of(batch: &Batch<'_>, pass: &Pass) -> f64 {
        let n = batch.x.rows();
        let rows = pass.heads[0].output().rows();
        let [g0, g1, h] = [0, 1, 2].map(|i| pass.heads[i].output().data());
        let mut total = 0.0;
        for r in 0..rows {
            let (t, y) = (batch.t[r % n], batch.y[r % n]);
            total += t * (y - g1[r]).powi(2) + (1.0 - t) * (y - g0[r]).powi(2) + (t - h[r]).powi(2);
        }
        -total / rows as f64
    }

    fn value_of(&self, batch: &Batch<'_>, pass: &Pass) -> ObjectiveValue {
        let l1 = Self::l1_of(batch, pass);
        let kl = loss_kl(&pass.post, 1.0);
        ObjectiveValue {
            l1,
            kl,
            loss: -l1 + self.config.beta * kl,
        }
    }

    /// Monte-Carlo log-likelihood: mean over subjects and noise samples of
    /// `-t(y-g¹)² - (1-t)(y-g⁰)² - (t-h)²`.
    pub fn loss_l1(&self, batch: &Batch<'_>, eps: &[Matrix]) -> Result<f64> {
        let pass = self.pass(batch, eps)?;
        Ok(Self::l1_of(batch, &pass))
    }

    /// `-L1 + β·KL`, the quantity training minimizes.
    pub fn total_objective(&self, batch: &Batch<'_>, eps: &[Matrix]) -> Result<f64> {
        Ok(self.objective(batch, eps)?.loss)
    }

    pub fn objective(&self, batch: &Batch<'_>, eps: &[Matrix]) -> Result<ObjectiveValue> {
        let pass = self.pass(batch, eps)?;
        Ok(self.value_of(batch, &pass))
    }

    /// Objective and its exact gradient with respect to `params()`.
    pub fn objective_and_gradient(&self, batch: &Batch<'_>, eps: &[Matrix]) -> Result<(ObjectiveValue, Vec<f64>)> {
        let pass = self.pass(batch, eps)?;
        let value = self.value_of(batch, &pass);

        let n = batch.x.rows();
        let k = self.config.latent_dim;
        let rows = pass.heads[0].output().rows();
        let scale = 2.0 / rows as f64;
        let [g0, g1, h] = [0, 1, 2].map(|i| pass.heads[i].output().data());
        let mut up = [Matrix::zeros(rows, 1), Matrix::zeros(rows, 1), Matrix::zeros(rows, 1)];
        for r in 0..rows {
            let (t, y) = (batch.t[r % n], batch.y[r % n]);
            up[0].data_mut()[r] = scale * (1.0 - t) * (g0[r] - y);
            up[1].data_mut()[r] = scale * t * (g1[r] - y);
            up[2].data_mut()[r] = scale * (h[r] - t);
        }
        let nets = [&self.outcome_heads[0], &self.outcome_heads[1], &self.treatment_head];
        let mut head_grads = Vec::with_capacity(3);
        let mut dz = Matrix::zeros(rows, k);
        for ((net, trace), upstream) in nets.iter().zip(&pass.heads).zip(&up) {
            let (g, dzi) = net.backward(trace, upstream)?;
            for (a, b) in dz.data_mut().iter_mut().zip(dzi.data()) {
                *a += b;
            }
            head_grads.push(g);
        }

        // chain through z = mu + sigma·eps, then sigma = softplus(raw) + floor
        let post = &pass.post;
        let beta_n = self.config.beta / n as f64;
        let mut d_out = Matrix::zeros(n, 2 * k);
        for (m, e) in eps.iter().enumerate() {
            for i in 0..n {
                let dzr = dz.row(m * n + i);
                let er = e.row(i);
                let row = d_out.row_mut(i);
                for j in 0..k {
                    row[j] += dzr[j];
                    row[k + j] += dzr[j] * er[j];
                }
            }
        }
        for i in 0..n {
            let (mu, sigma, raw) = (post.mu.row(i), post.sigma.row(i), pass.raw_sigma.row(i));
            let row = d_out.row_mut(i);
            for j in 0..k {
                row[j] += beta_n * mu[j];
                let dsigma = row[k + j] + beta_n * (sigma[j] - 1.0 / sigma[j]);
                row[k + j] = dsigma * crate::tensor::sigmoid(raw[j]);
            }
        }
        let (enc_grads, _) = self.encoder.backward(&pass.encoder, &d_out)?;

        let mut grad = Vec::with_capacity(self.param_count());
        enc_grads.flatten_into(&mut grad);
        for g in &head_grads {
            g.flatten_into(&mut grad);
        }
        Ok((value, grad))
    }

    fn require_fitted(&self) -> Result<()> {
        if self.fitted {
            Ok(())
        } else {
            Err(Error::NotFitted)
        }
    }

    /// Both outcome heads at latent points `z`, in original outcome units.
    pub fn potential_outcomes(&self, z: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let s = &self.scaling;
        let y0 = self.outcome_heads[0].forward(z)?;
        let y1 = self.outcome_heads[1].forward(z)?;
        Ok((
            y0.data().iter().map(|&v| s.outcome_from_model(v)).collect(),
            y1.data().iter().map(|&v| s.outcome_from_model(v)).collect(),
        ))
    }

    /// Factual-arm outcome prediction and propensity for raw covariates with
    /// explicit latent noise `eps` (`eps = 0` predicts at the posterior mean).
    pub fn predict_heads(&self, x_raw: &Matrix, t: &[u8], eps: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        self.require_fitted()?;
        if t.len() != x_raw.rows() {
            return Err(Error::shape(
                "predict_heads",
                format!("{} covariate rows", x_raw.rows()),
                format!("{} treatments", t.len()),
            ));
        }
        if let Some((index, &v)) = t.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::NonBinaryTreatment { index, value: f64::from(v) });
        }
        let post = self.encode_raw(x_raw)?;
        let z = sample_latent(&post, eps)?;
        let (y0, y1) = self.potential_outcomes(&z)?;
        let y_hat = t.iter().enumerate().map(|(i, &ti)| if ti == 1 { y1[i] } else { y0[i] }).collect();
        let t_hat = self.treatment_head.forward(&z)?.into_vec();
        Ok((y_hat, t_hat))
    }

    pub(crate) fn ensure_fitted(&self) -> Result<()> {
        self.require_fitted()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> CevibConfig {
        CevibConfig {
            latent_dim: 3,
            encoder_hidden: vec![6],
            head_hidden: vec![5],
            ..Default::default()
        }
    }

    fn posterior(mu: &[f64], sigma: &[f64], k: usize) -> LatentPosterior {
        LatentPosterior {
            mu: Matrix::from_vec(mu.len() / k, k, mu.to_vec()).unwrap(),
            sigma: Matrix::from_vec(sigma.len() / k, k, sigma.to_vec()).unwrap(),
        }
    }

    #[test]
    fn zero_encoder_gives_softplus_of_zero() {
        let cfg = small_config();
        let floor = cfg.sigma_floor;
        let model = CevibModel::zeroed(cfg, 4).unwrap();
        let x = RngStream::new(0, 0).gauss_matrix(5, 4);
        let post = model.encode(&x).unwrap();
        assert_eq!(post.mu.shape(), (5, 3));
        assert_eq!(post.sigma.shape(), (5, 3));
        assert!(post.mu.data().iter().all(|&m| m == 0.0));
        let expect = std::f64::consts::LN_2 + floor;
        assert!(post.sigma.data().iter().all(|&s| (s - expect).abs() < 1e-15));
    }

    #[test]
    fn identical_rows_encode_identically() {
        let model = CevibModel::new(small_config(), 4, &mut RngStream::new(1, 0)).unwrap();
        let row = [0.3, -1.0, 2.0, 0.5];
        let x = Matrix::from_rows(&[row, row]).unwrap();
        let post = model.encode(&x).unwrap();
        assert_eq!(post.mu.row(0), post.mu.row(1));
        assert_eq!(post.sigma.row(0), post.sigma.row(1));
    }

    #[test]
    fn encode_rejects_wrong_width() {
        let model = CevibModel::zeroed(small_config(), 4).unwrap();
        assert!(model.encode(&Matrix::zeros(2, 5)).is_err());
    }

    #[test]
    fn sampling_cases() {
        let post = posterior(&[1.0, -2.0], &[0.5, 3.0], 2);
        assert_eq!(sample_latent(&post, &Matrix::zeros(1, 2)).unwrap(), post.mu);
        let unit = posterior(&[0.0, 0.0], &[1.0, 1.0], 2);
        let e = Matrix::from_rows(&[[0.7, -1.3]]).unwrap();
        assert_eq!(sample_latent(&unit, &e).unwrap(), e);
        assert!(sample_latent(&post, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn kl_cases() {
        assert_eq!(loss_kl(&posterior(&[0.0; 6], &[1.0; 6], 3), 2.0), 0.0);
        assert!((loss_kl(&posterior(&[1.0], &[1.0], 1), 1.0) - 0.5).abs() < 1e-15);
        let p = posterior(&[0.2, -0.4, 0.0, 1.0], &[0.9, 1.1, 0.5, 2.0], 2);
        assert!(loss_kl(&p, 1.0) > 0.0);
    }

    fn constant_heads(model: &mut CevibModel, y0: f64, y1: f64, h: f64) {
        for (arm, c) in [(0u8, y0), (1u8, y1)] {
            let head = model.outcome_head_mut(arm);
            for l in head.layers_mut() {
                l.weight.data_mut().iter_mut().for_each(|w| *w = 0.0);
                l.bias.iter_mut().for_each(|b| *b = 0.0);
            }
            let last = head.layers_mut().last_mut().unwrap();
            last.bias[0] = c;
        }
        let th = model.treatment_head_mut();
        for l in th.layers_mut() {
            l.weight.data_mut().iter_mut().for_each(|w| *w = 0.0);
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        // sigmoid(±40) is 1 or 0 to double precision
        th.layers_mut().last_mut().unwrap().bias[0] = if h >= 0.5 { 40.0 } else { -40.0 };
    }

    #[test]
    fn single_subject_l1() {
        let mut model = CevibModel::new(small_config(), 2, &mut RngStream::new(2, 0)).unwrap();
        constant_heads(&mut model, 0.0, 0.0, 1.0);
        let x = Matrix::zeros(1, 2);
        let batch = Batch { x: &x, t: &[1.0], y: &[2.0] };
        let eps = [RngStream::new(3, 0).gauss_matrix(1, 3)];
        let l1 = model.loss_l1(&batch, &eps).unwrap();
        assert!((l1 + 4.0).abs() < 1e-12, "{l1}");
    }

    #[test]
    fn perfect_heads_give_zero_l1() {
        let mut model = CevibModel::new(small_config(), 2, &mut RngStream::new(2, 0)).unwrap();
        constant_heads(&mut model, 1.5, -0.5, 1.0);
        let x = RngStream::new(4, 0).gauss_matrix(3, 2);
        let batch = Batch { x: &x, t: &[1.0, 1.0, 1.0], y: &[-0.5, -0.5, -0.5] };
        let eps: Vec<Matrix> = (0..4).map(|m| RngStream::new(5, m).gauss_matrix(3, 3)).collect();
        assert!(model.loss_l1(&batch, &eps).unwrap().abs() < 1e-20);

        let mut cfg = small_config();
        cfg.beta = 0.0;
        model.config = cfg;
        assert!(model.total_objective(&batch, &eps).unwrap().abs() < 1e-20);
    }

    #[test]
    fn zero_beta_objective_is_negated_l1() {
        let mut cfg = small_config();
        cfg.beta = 0.0;
        let model = CevibModel::new(cfg, 2, &mut RngStream::new(6, 0)).unwrap();
        let mut rng = RngStream::new(7, 0);
        let x = rng.gauss_matrix(4, 2);
        let batch = Batch { x: &x, t: &[0.0, 1.0, 1.0, 0.0], y: &[0.3, -1.0, 2.0, 0.0] };
        let eps = [rng.gauss_matrix(4, 3)];
        let v = model.objective(&batch, &eps).unwrap();
        assert_eq!(v.loss, -v.l1);
        assert!(v.l1 <= 0.0);
    }

    #[test]
    fn non_binary_treatment_rejected() {
        let model = CevibModel::zeroed(small_config(), 2).unwrap();
        let x = Matrix::zeros(2, 2);
        let batch = Batch { x: &x, t: &[0.0, 0.5], y: &[0.0, 0.0] };
        let err = model.loss_l1(&batch, &[Matrix::zeros(2, 3)]).unwrap_err();
        assert!(matches!(err, Error::NonBinaryTreatment { index: 1, .. }));
    }

    #[test]
    fn params_round_trip() {
        let mut model = CevibModel::new(small_config(), 4, &mut RngStream::new(8, 0)).unwrap();
        let p = model.params();
        assert_eq!(p.len(), model.param_count());
        assert_eq!(model.param_layout().len(), p.len());
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.0).collect();
        model.set_params(&shifted).unwrap();
        assert_eq!(model.params(), shifted);
        assert!(model.set_params(&p[1..]).is_err());
    }

    #[test]
    fn prediction_requires_fit() {
        let model = CevibModel::zeroed(small_config(), 2).unwrap();
        let err = model.predict_heads(&Matrix::zeros(1, 2), &[0], &Matrix::zeros(1, 3)).unwrap_err();
        assert!(matches!(err, Error::NotFitted));
    }

    #[test]
    fn constant_heads_predict_constants() {
        let mut model = CevibModel::new(small_config(), 2, &mut RngStream::new(9, 0)).unwrap();
        constant_heads(&mut model, -1.0, 2.5, 1.0);
        model.mark_fitted();
        let mut rng = RngStream::new(10, 0);
        let x = rng.gauss_matrix(6, 2);
        let eps = rng.gauss_matrix(6, 3);
        let (y, t_hat) = model.predict_heads(&x, &[1; 6], &eps).unwrap();
        assert!(y.iter().all(|&v| v == 2.5));
        assert!(t_hat.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn zero_noise_predicts_at_posterior_mean() {
        let mut model = CevibModel::new(small_config(), 2, &mut RngStream::new(11, 0)).unwrap();
        model.mark_fitted();
        let x = RngStream::new(12, 0).gauss_matrix(4, 2);
        let t = [0, 1, 0, 1];
        let (y, _) = model.predict_heads(&x, &t, &Matrix::zeros(4, 3)).unwrap();
        let mu = model.encode_raw(&x).unwrap().mu;
        let (y0, y1) = model.potential_outcomes(&mu).unwrap();
        for i in 0..4 {
            assert_eq!(y[i], if t[i] == 1 { y1[i] } else { y0[i] });
        }
    }

    #[test]
    fn propensity_is_a_probability_for_extreme_inputs() {
        let mut model = CevibModel::new(small_config(), 2, &mut RngStream::new(13, 0)).unwrap();
        model.mark_fitted();
        let x = Matrix::from_rows(&[[1e3, -1e3], [-50.0, 80.0], [0.0, 0.0]]).unwrap();
        let (_, t_hat) = model.predict_heads(&x, &[0, 1, 0], &Matrix::zeros(3, 3)).unwrap();
        assert!(t_hat.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }
}
