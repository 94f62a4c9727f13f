use serde::{Deserialize, Serialize};

use super::{Matrix, ParamLayout, RngStream};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Elu,
    Linear,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Elu => {
                if v > 0.0 {
                    v
                } else {
                    v.exp_m1()
                }
            }
            Activation::Linear => v,
            Activation::Sigmoid => sigmoid(v),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Elu => {
                if out > 0.0 {
                    1.0
                } else {
                    out + 1.0
                }
            }
            Activation::Linear => 1.0,
            Activation::Sigmoid => out * (1.0 - out),
        }
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer computing `act(x · W + b)`; `weight` is `in × out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = x.matmul(&self.weight)?;
        let act = self.activation;
        for r in 0..out.rows() {
            for (v, b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *v = act.apply(*v + b);
            }
        }
        Ok(out)
    }
}

/// Feed-forward network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer activations kept from a forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// `activations[0]` is the input, `activations[i + 1]` the output of layer `i`.
    activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("trace holds at least the input")
    }
}

/// Gradients with the same shapes as the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<(Matrix, Vec<f64>)>,
}

impl MlpGrads {
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for (w, b) in &self.layers {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.data().iter().chain(b).all(|&v| v == 0.0))
    }
}

impl Mlp {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::shape(
                    "Mlp::new",
                    format!("layer {i} weight out dim {}", l.out_dim()),
                    format!("bias length {}", l.bias.len()),
                ));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(
                    "Mlp::new",
                    format!("layer {i} out dim {}", pair[0].out_dim()),
                    format!("layer {} in dim {}", i + 1, pair[1].in_dim()),
                ));
            }
        }
        Ok(Mlp { layers })
    }

    /// Network with layer widths `sizes` (input first), all parameters zero.
    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        Self::build(sizes, hidden, output, Matrix::zeros)
    }

    /// Glorot-uniform weights and zero biases.
    pub fn init(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut RngStream,
    ) -> Result<Self> {
        Self::build(sizes, hidden, output, |fan_in, fan_out| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            rng.uniform_matrix(fan_in, fan_out, -limit, limit)
        })
    }

    fn build(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        mut weights: impl FnMut(usize, usize) -> Matrix,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense {
                weight: weights(w[0], w[1]),
                bias: vec![0.0; w[1]],
                activation: if i + 1 == n { output } else { hidden },
            })
            .collect();
        Mlp::new(layers)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.in_dim() {
            return Err(Error::shape(
                "mlp_forward",
                format!("input has {} columns", x.cols()),
                format!("network expects {}", self.in_dim()),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut h = self.layers[0].forward(x)?;
        for layer in &self.layers[1..] {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    pub fn forward_trace(&self, x: &Matrix) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.clone());
        for layer in &self.layers {
            let next = layer.forward(activations.last().unwrap())?;
            activations.push(next);
        }
        Ok(ForwardTrace { activations })
    }

    /// Reverse-mode pass: gradients of `sum(upstream ⊙ output)` with respect
    /// to every parameter and to the input.
    pub fn backward(&self, trace: &ForwardTrace, upstream: &Matrix) -> Result<(MlpGrads, Matrix)> {
        if trace.activations.len() != self.layers.len() + 1 {
            return Err(Error::shape(
                "mlp_backward",
                format!("{} layers", self.layers.len()),
                format!("trace of {} activations", trace.activations.len()),
            ));
        }
        upstream.same_shape(trace.output(), "mlp_backward")?;

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let out = &trace.activations[i + 1];
            let input = &trace.activations[i];
            for (d, &o) in delta.data_mut().iter_mut().zip(out.data()) {
                *d *= layer.activation.derivative_from_output(o);
            }
            let dw = input.t_matmul(&delta)?;
            let db = delta.col_sums();
            let next = delta.matmul_t(&layer.weight)?;
            grads.push((dw, db));
            delta = next;
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, delta))
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
    }

    /// Overwrites parameters from the front of `src`; returns the count consumed.
    pub fn load_from(&mut self, src: &[f64]) -> Result<usize> {
        if src.len() < self.param_count() {
            return Err(Error::shape(
                "Mlp::load_from",
                format!("{} parameters", self.param_count()),
                format!("{} values", src.len()),
            ));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&src[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&src[at..at + nb]);
            at += nb;
        }
        Ok(at)
    }

    pub fn describe_params(&self, prefix: &str, layout: &mut ParamLayout) {
        for (i, l) in self.layers.iter().enumerate() {
            layout.push(format!("{prefix}.layer{i}.weight"), l.weight.data().len());
            layout.push(format!("{prefix}.layer{i}.bias"), l.bias.len());
        }
    }
}
