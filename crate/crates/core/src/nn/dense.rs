use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{NnError, Tensor};
use crate::rng;

/// Default LeakyReLU negative slope.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn leaky_relu() -> Self {
        Activation::LeakyRelu {
            slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Sigmoid => super::loss::sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative given the pre-activation `z` and the activation output `y`.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn has_kink(self) -> bool {
        matches!(self, Activation::LeakyRelu { .. })
    }
}

/// One affine stage followed by an elementwise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `[out, in]`, row-major.
    pub(crate) weights: Tensor,
    /// `[out]`.
    pub(crate) bias: Tensor,
    pub(crate) activation: Activation,
}

impl Dense {
    pub fn new(weights: Tensor, bias: Tensor, activation: Activation) -> Result<Self, NnError> {
        let [out, _] = weights.shape() else {
            return Err(NnError::Shape(format!(
                "weights must be [out, in], got {:?}",
                weights.shape()
            )));
        };
        if bias.shape() != [*out] {
            return Err(NnError::Shape(format!(
                "bias shape {:?} does not match {out} outputs",
                bias.shape()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` initialisation.
    pub fn random(input: usize, output: usize, activation: Activation, rng: &mut rng::Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let weights = (0..input * output).map(|_| rng.random_range(-bound..=bound)).collect();
        let bias = (0..output).map(|_| rng.random_range(-bound..=bound)).collect();
        Self {
            weights: Tensor::new(vec![output, input], weights).expect("sized above"),
            bias: Tensor::vector(bias),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn output_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    fn affine(&self, input: &[f64], rows: usize) -> Vec<f64> {
        let (out, inp) = (self.output_dim(), self.input_dim());
        let w = self.weights.values();
        let b = self.bias.values();
        let mut z = Vec::with_capacity(rows * out);
        for r in 0..rows {
            let a = &input[r * inp..(r + 1) * inp];
            for o in 0..out {
                let row = &w[o * inp..(o + 1) * inp];
                let dot: f64 = row.iter().zip(a).map(|(wi, ai)| wi * ai).sum();
                z.push(b[o] + dot);
            }
        }
        z
    }
}

#[derive(Debug, Clone, Default)]
struct ForwardCache {
    rows: usize,
    /// Input to each layer, then the final output.
    activations: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    input_was_vector: bool,
}

/// Feed-forward chain of [`Dense`] layers with reverse-mode gradients.
///
/// `forward` caches intermediates; `backward` consumes that cache and
/// overwrites each parameter's gradient slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(
    try_from = "super::checkpoint::NetCheckpoint",
    into = "super::checkpoint::NetCheckpoint"
)]
pub struct DenseNet {
    layers: Vec<Dense>,
    cache: Option<ForwardCache>,
}

impl PartialEq for DenseNet {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl DenseNet {
    pub fn new(layers: Vec<Dense>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Shape("network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(NnError::Shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { layers, cache: None })
    }

    /// Randomly initialised chain through `dims` (`dims.len() - 1` layers).
    /// Hidden layers use `hidden`; the last uses `output`.
    pub fn random(dims: &[usize], hidden: Activation, output: Activation, seed: u64) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut rng = rng::seeded(seed);
        let n = dims.len() - 1;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let act = if i + 1 == n { output } else { hidden };
                Dense::random(d[0], d[1], act, &mut rng)
            })
            .collect();
        Self { layers, cache: None }
    }

    /// Five linear stages with LeakyReLU after the first four.
    pub fn five_stage(
        input: usize,
        hidden: [usize; 4],
        output: usize,
        leaky_slope: f64,
        output_activation: Activation,
        seed: u64,
    ) -> Self {
        let dims = [input, hidden[0], hidden[1], hidden[2], hidden[3], output];
        Self::random(
            &dims,
            Activation::LeakyRelu { slope: leaky_slope },
            output_activation,
            seed,
        )
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, input: &Tensor) -> Result<usize, NnError> {
        let (rows, cols) = input.as_rows()?;
        if cols != self.input_dim() {
            return Err(NnError::Shape(format!(
                "input has {cols} features, network expects {}",
                self.input_dim()
            )));
        }
        Ok(rows)
    }

    fn shape_output(&self, rows: usize, vector: bool, values: Vec<f64>) -> Tensor {
        if vector {
            Tensor::vector(values)
        } else {
            Tensor::matrix(rows, self.output_dim(), values).expect("sized by construction")
        }
    }

    /// Forward pass that records intermediates for [`DenseNet::backward`].
    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor, NnError> {
        let rows = self.check_input(input)?;
        let mut cache = ForwardCache {
            rows,
            activations: Vec::with_capacity(self.layers.len() + 1),
            pre: Vec::with_capacity(self.layers.len()),
            input_was_vector: input.shape().len() == 1,
        };
        let mut current = input.values().to_vec();
        for layer in &self.layers {
            let z = layer.affine(&current, rows);
            let y: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            cache.activations.push(current);
            cache.pre.push(z);
            current = y;
        }
        let out = self.shape_output(rows, cache.input_was_vector, current.clone());
        cache.activations.push(current);
        self.cache = Some(cache);
        if !out.all_finite() {
            return Err(NnError::Numeric("non-finite forward output".into()));
        }
        Ok(out)
    }

    /// Forward pass without caching; usable on a shared reference.
    pub fn infer(&self, input: &Tensor) -> Result<Tensor, NnError> {
        let rows = self.check_input(input)?;
        let mut current = input.values().to_vec();
        for layer in &self.layers {
            current = layer
                .affine(&current, rows)
                .into_iter()
                .map(|v| layer.activation.apply(v))
                .collect();
        }
        Ok(self.shape_output(rows, input.shape().len() == 1, current))
    }

    /// Reverse-mode pass from the gradient of the loss w.r.t. the last
    /// forward output. Overwrites parameter gradients and returns the
    /// gradient w.r.t. the forward input.
    pub fn backward(&mut self, output_grad: &Tensor) -> Result<Tensor, NnError> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| NnError::State("backward called without a cached forward pass".into()))?;
        let rows = cache.rows;
        let expected = rows * self.output_dim();
        if output_grad.len() != expected {
            let len = output_grad.len();
            self.cache = Some(cache);
            return Err(NnError::Shape(format!(
                "output gradient has {len} values, expected {expected}"
            )));
        }
        let mut upstream = output_grad.values().to_vec();
        for (idx, layer) in self.layers.iter_mut().enumerate().rev() {
            let (out, inp) = (layer.output_dim(), layer.input_dim());
            let z = &cache.pre[idx];
            let y = &cache.activations[idx + 1];
            let a = &cache.activations[idx];
            let act = layer.activation;
            let dz: Vec<f64> = upstream
                .iter()
                .zip(z.iter().zip(y))
                .map(|(g, (&zv, &yv))| g * act.derivative(zv, yv))
                .collect();

            let mut dw = vec![0.0; out * inp];
            let mut db = vec![0.0; out];
            let mut da = vec![0.0; rows * inp];
            let w = layer.weights.values();
            for r in 0..rows {
                let a_row = &a[r * inp..(r + 1) * inp];
                let da_row = &mut da[r * inp..(r + 1) * inp];
                for o in 0..out {
                    let g = dz[r * out + o];
                    if g == 0.0 {
                        continue;
                    }
                    db[o] += g;
                    let w_row = &w[o * inp..(o + 1) * inp];
                    for ((dwi, &ai), (dai, &wi)) in dw[o * inp..(o + 1) * inp]
                        .iter_mut()
                        .zip(a_row)
                        .zip(da_row.iter_mut().zip(w_row))
                    {
                        *dwi += g * ai;
                        *dai += g * wi;
                    }
                }
            }
            layer.weights.grad_mut().copy_from_slice(&dw);
            layer.bias.grad_mut().copy_from_slice(&db);
            upstream = da;
        }
        if !upstream.iter().all(|v| v.is_finite()) {
            return Err(NnError::Numeric("non-finite gradient".into()));
        }
        Ok(Tensor::new(
            if cache.input_was_vector {
                vec![self.input_dim()]
            } else {
                vec![rows, self.input_dim()]
            },
            upstream,
        )
        .expect("sized by construction"))
    }

    /// Pre-activations of kinked (LeakyReLU) layers from the cached forward
    /// pass: the smallest `|z|` seen, or `None` without a cache.
    pub fn min_kink_distance(&self) -> Option<f64> {
        let cache = self.cache.as_ref()?;
        Some(
            self.layers
                .iter()
                .zip(&cache.pre)
                .filter(|(l, _)| l.activation.has_kink())
                .flat_map(|(_, z)| z.iter().map(|v| v.abs()))
                .fold(f64::INFINITY, f64::min),
        )
    }

    pub fn zero_grad(&mut self) {
        for layer in &mut self.layers {
            layer.weights.zero_grad();
            layer.bias.zero_grad();
        }
    }

    /// All parameters flattened layer by layer (weights, then bias).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.values());
            out.extend_from_slice(layer.bias.values());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for t in [&mut layer.weights, &mut layer.bias] {
                let n = t.len();
                t.values_mut().copy_from_slice(&params[offset..offset + n]);
                offset += n;
            }
        }
        Ok(())
    }

    /// Parameter gradients in the same order as [`DenseNet::params`];
    /// zeros where no backward pass has filled a slot.
    pub fn grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for t in [&layer.weights, &layer.bias] {
                match t.grad() {
                    Some(g) => out.extend_from_slice(g),
                    None => out.extend(std::iter::repeat_n(0.0, t.len())),
                }
            }
        }
        out
    }

    pub fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.all_finite() && l.bias.all_finite())
    }
}
