use serde::{Deserialize, Serialize};

use super::{Matrix, Rng, EPS_CLAMP};
use crate::error::{Error, Result};

/// Per-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu {
        alpha: f64,
    },
    Tanh,
    /// Output clamped to `[EPS_CLAMP, 1 - EPS_CLAMP]`.
    Sigmoid,
    Softmax,
    Linear,
}

impl Activation {
    pub const LEAKY_ALPHA: f64 = 0.2;

    pub fn leaky() -> Self {
        Activation::LeakyRelu {
            alpha: Self::LEAKY_ALPHA,
        }
    }

    fn is_output_only(self) -> bool {
        matches!(self, Activation::Sigmoid | Activation::Softmax)
    }

    fn apply(self, z: &Matrix) -> Matrix {
        match self {
            Activation::LeakyRelu { alpha } => z.map(|v| if v > 0.0 { v } else { alpha * v }),
            Activation::Tanh => z.map(f64::tanh),
            Activation::Sigmoid => z.map(|v| sigmoid(v).clamp(EPS_CLAMP, 1.0 - EPS_CLAMP)),
            Activation::Linear => z.clone(),
            Activation::Softmax => {
                let mut out = z.clone();
                for r in 0..out.rows() {
                    softmax_in_place(out.row_mut(r));
                }
                out
            }
        }
    }

    /// Maps `dL/dy` to `dL/dz` for this layer.
    fn backprop(self, z: &Matrix, y: &Matrix, grad: &Matrix) -> Matrix {
        match self {
            Activation::LeakyRelu { alpha } => {
                let mut out = grad.clone();
                for (g, &zv) in out.data_mut().iter_mut().zip(z.data()) {
                    if zv <= 0.0 {
                        *g *= alpha;
                    }
                }
                out
            }
            Activation::Tanh => {
                let mut out = grad.clone();
                for (g, &yv) in out.data_mut().iter_mut().zip(y.data()) {
                    *g *= 1.0 - yv * yv;
                }
                out
            }
            Activation::Sigmoid => {
                let mut out = grad.clone();
                for (g, &yv) in out.data_mut().iter_mut().zip(y.data()) {
                    *g *= yv * (1.0 - yv);
                }
                out
            }
            Activation::Linear => grad.clone(),
            Activation::Softmax => {
                let mut out = grad.clone();
                for r in 0..out.rows() {
                    let yr = y.row(r);
                    let dot: f64 = grad.row(r).iter().zip(yr).map(|(g, p)| g * p).sum();
                    for (o, &p) in out.row_mut(r).iter_mut().zip(yr) {
                        *o = p * (*o - dot);
                    }
                }
                out
            }
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Fully connected feed-forward network.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    activations: Vec<Activation>,
    weights: Vec<Matrix>,
    biases: Vec<Matrix>,
    /// Bumped on every parameter mutation so stale caches can be detected.
    #[serde(skip)]
    generation: u64,
}

impl PartialEq for MlpModel {
    fn eq(&self, other: &Self) -> bool {
        self.layer_dims == other.layer_dims
            && self.activations == other.activations
            && self.weights == other.weights
            && self.biases == other.biases
    }
}

fn validate_layout(dims: &[usize], activations: &[Activation]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::contract("an MLP needs at least an input and an output size"));
    }
    if dims.contains(&0) {
        return Err(Error::contract(format!("zero-width layer in {dims:?}")));
    }
    if activations.len() != dims.len() - 1 {
        return Err(Error::contract(format!(
            "{} activations for {} layers",
            activations.len(),
            dims.len() - 1
        )));
    }
    if let Some(k) = activations[..activations.len() - 1]
        .iter()
        .position(|a| a.is_output_only())
    {
        return Err(Error::contract(format!(
            "layer {k}: sigmoid/softmax are only allowed on the final layer"
        )));
    }
    Ok(())
}

impl MlpModel {
    /// Random init: weights uniform on `±sqrt(3 / fan_in)`, biases zero.
    pub fn new(layer_dims: &[usize], activations: &[Activation], rng: &mut Rng) -> Result<Self> {
        validate_layout(layer_dims, activations)?;
        let mut weights = Vec::with_capacity(activations.len());
        let mut biases = Vec::with_capacity(activations.len());
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (3.0 / fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.uniform_range(-limit, limit))
                .collect();
            weights.push(Matrix::from_vec(fan_in, fan_out, data)?);
            biases.push(Matrix::zeros(1, fan_out));
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            activations: activations.to_vec(),
            weights,
            biases,
            generation: 0,
        })
    }

    /// Builds a model from explicit parameters.
    pub fn from_parts(activations: Vec<Activation>, weights: Vec<Matrix>, biases: Vec<Matrix>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::contract(format!(
                "{} weight matrices vs {} bias rows",
                weights.len(),
                biases.len()
            )));
        }
        let mut dims = vec![weights[0].rows()];
        for (k, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.rows() != *dims.last().unwrap() || b.shape() != (1, w.cols()) {
                return Err(Error::shape(
                    format!("layer {k}"),
                    format!("weights {:?}, bias {:?}", w.shape(), b.shape()),
                ));
            }
            dims.push(w.cols());
        }
        validate_layout(&dims, &activations)?;
        Ok(Self {
            layer_dims: dims,
            activations,
            weights,
            biases,
            generation: 0,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Matrix] {
        &self.biases
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Mutable access to `(weights, biases)`; invalidates outstanding caches.
    pub fn params_mut(&mut self) -> (&mut [Matrix], &mut [Matrix]) {
        self.generation += 1;
        (&mut self.weights, &mut self.biases)
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(|m| m.data().len()).sum()
    }

    /// Runs the network and keeps what `backward` needs.
    pub fn forward(&self, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if batch.cols() != self.input_dim() {
            return Err(Error::shape(
                "layer 0 input",
                format!("batch has {} columns, layer expects {}", batch.cols(), self.input_dim()),
            ));
        }
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut pre = Vec::with_capacity(self.num_layers());
        let mut current = batch.clone();
        for k in 0..self.num_layers() {
            let mut z = current.matmul(&self.weights[k])?;
            z.add_row_broadcast(&self.biases[k])?;
            let y = self.activations[k].apply(&z);
            inputs.push(std::mem::replace(&mut current, y));
            pre.push(z);
        }
        let cache = ForwardCache {
            generation: self.generation,
            layer_dims: self.layer_dims.clone(),
            inputs,
            pre,
            output: current.clone(),
        };
        Ok((current, cache))
    }

    /// Forward pass without keeping a cache.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        if batch.cols() != self.input_dim() {
            return Err(Error::shape(
                "layer 0 input",
                format!("batch has {} columns, layer expects {}", batch.cols(), self.input_dim()),
            ));
        }
        let mut current = batch.clone();
        for k in 0..self.num_layers() {
            let mut z = current.matmul(&self.weights[k])?;
            z.add_row_broadcast(&self.biases[k])?;
            current = self.activations[k].apply(&z);
        }
        Ok(current)
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        if cache.layer_dims != self.layer_dims {
            return Err(Error::contract(format!(
                "cache built for layers {:?}, model has {:?}",
                cache.layer_dims, self.layer_dims
            )));
        }
        if cache.generation != self.generation {
            return Err(Error::contract(
                "stale forward cache: model parameters changed since the forward pass",
            ));
        }
        Ok(())
    }

    /// Backpropagates `dL/d(output)` through every layer.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &Matrix) -> Result<Gradients> {
        self.check_cache(cache)?;
        let last = self.num_layers() - 1;
        if loss_grad.shape() != cache.output.shape() {
            return Err(Error::shape(
                format!("layer {last} output gradient"),
                format!("{:?} vs output {:?}", loss_grad.shape(), cache.output.shape()),
            ));
        }
        let dz = self.activations[last].backprop(&cache.pre[last], &cache.output, loss_grad);
        self.backward_from(cache, dz)
    }

    /// Backpropagates a gradient taken with respect to the final pre-activation.
    pub fn backward_logits(&self, cache: &ForwardCache, logit_grad: &Matrix) -> Result<Gradients> {
        self.check_cache(cache)?;
        if logit_grad.shape() != cache.output.shape() {
            return Err(Error::shape(
                format!("layer {} logit gradient", self.num_layers() - 1),
                format!("{:?} vs output {:?}", logit_grad.shape(), cache.output.shape()),
            ));
        }
        self.backward_from(cache, logit_grad.clone())
    }

    fn backward_from(&self, cache: &ForwardCache, mut dz: Matrix) -> Result<Gradients> {
        let n = self.num_layers();
        let mut weights = vec![Matrix::zeros(0, 0); n];
        let mut biases = vec![Matrix::zeros(0, 0); n];
        for k in (0..n).rev() {
            weights[k] = cache.inputs[k].t_matmul(&dz)?;
            biases[k] = dz.sum_rows();
            let dx = dz.matmul_t(&self.weights[k])?;
            if k == 0 {
                return Ok(Gradients {
                    weights,
                    biases,
                    input: dx,
                });
            }
            dz = self.activations[k - 1].backprop(&cache.pre[k - 1], &cache.inputs[k], &dx);
        }
        unreachable!("a model always has at least one layer")
    }
}

/// Intermediate values recorded by [`MlpModel::forward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    generation: u64,
    layer_dims: Vec<usize>,
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    output: Matrix,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

/// Parameter gradients plus the gradient with respect to the network input.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Matrix>,
    pub input: Matrix,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(Matrix::is_finite) && self.input.is_finite()
    }

    /// Elementwise sum of parameter gradients; input gradients are summed too
    /// when their shapes agree.
    pub fn accumulate(&mut self, other: &Gradients) -> Result<()> {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.add_scaled(b, 1.0)?;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.add_scaled(b, 1.0)?;
        }
        if self.input.shape() == other.input.shape() {
            self.input.add_scaled(&other.input, 1.0)?;
        }
        Ok(())
    }
}
