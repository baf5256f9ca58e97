use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{reject, Result};
use crate::nnet::matrix::Matrix;
use crate::rng::RunRng;

/// Sigmoid outputs are clamped to `[SIGMOID_CLAMP, 1 - SIGMOID_CLAMP]` so
/// later logarithms stay finite.
pub const SIGMOID_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => {
                let y = 1.0 / (1.0 + (-z).exp());
                y.clamp(SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP)
            }
        }
    }

    /// Derivative expressed through the activation output `y = apply(z)`.
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

/// One dense layer: `y = activation(x W + b)`.
///
/// The weight matrix is `(fan_in, fan_out)` so batches multiply on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// A feed-forward stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Per-layer pre/post activations captured during a forward pass;
/// everything `backward` needs without recomputation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        self.post.last().unwrap_or(&self.input)
    }

    pub fn batch_size(&self) -> usize {
        self.input.rows()
    }

    /// Pre-activation values per layer.
    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }

    /// Post-activation values per layer.
    pub fn post_activations(&self) -> &[Matrix] {
        &self.post
    }
}

/// Parameter gradients, shape-congruent with the owning [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub d_weight: Matrix,
    pub d_bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    d_weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    d_bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.d_weight.add_assign(&b.d_weight);
            for (x, y) in a.d_bias.iter_mut().zip(&b.d_bias) {
                *x += y;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.d_weight.data());
            out.extend_from_slice(&l.d_bias);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.d_weight.is_finite() && l.d_bias.iter().all(|v| v.is_finite()))
    }
}

impl DenseNet {
    /// Builds a net with the given layer dimensions, e.g. `[2, 32, 32, 1]`.
    ///
    /// Hidden layers use `hidden`, the final layer `output`. Weights are
    /// Xavier-uniform (`±sqrt(6 / (fan_in + fan_out))`) drawn row-major
    /// from `rng`; biases start at zero.
    pub fn new(dims: &[usize], hidden: Activation, output: Activation, rng: &mut RunRng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        assert!(dims.iter().all(|&d| d > 0), "layer dims must be positive");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for i in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[i], dims[i + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            let data: Vec<f64> = (0..fan_in * fan_out).map(|_| dist.sample(rng)).collect();
            let activation = if i + 2 == dims.len() { output } else { hidden };
            layers.push(Layer {
                weight: Matrix::from_vec(fan_in, fan_out, data).expect("finite init"),
                bias: vec![0.0; fan_out],
                activation,
            });
        }
        DenseNet { layers }
    }

    /// Builds a net from explicit layers, validating dimension chaining.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return reject("network needs at least one layer");
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return reject(format!(
                    "layer dims do not chain: {} -> {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                ));
            }
        }
        for l in &layers {
            if l.bias.len() != l.out_dim() {
                return reject("bias length must match layer output dim");
            }
            if !l.weight.is_finite() || !l.bias.iter().all(|v| v.is_finite()) {
                return reject("parameters must be finite");
            }
        }
        Ok(DenseNet { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "parameter count mismatch");
        let mut offset = 0;
        for l in &mut self.layers {
            let w = l.weight.data_mut();
            w.copy_from_slice(&flat[offset..offset + w.len()]);
            offset += w.len();
            let b_len = l.bias.len();
            l.bias.copy_from_slice(&flat[offset..offset + b_len]);
            offset += b_len;
        }
    }

    /// Runs the forward pass on a batch (one sample per row).
    pub fn forward(&self, x: &Matrix) -> Result<ForwardTrace> {
        if x.cols() != self.input_dim() {
            return reject(format!(
                "input has {} columns, network expects {}",
                x.cols(),
                self.input_dim()
            ));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for layer in &self.layers {
            let z = a.matmul(&layer.weight).add_row_broadcast(&layer.bias);
            let y = z.map(|v| layer.activation.apply(v));
            pre.push(z);
            a = y.clone();
            post.push(y);
        }
        Ok(ForwardTrace {
            input: x.clone(),
            pre,
            post,
        })
    }

    /// Reverse-mode pass: gradients of `sum(output ⊙ d_out)` with respect
    /// to every parameter and to the input.
    pub fn backward(&self, trace: &ForwardTrace, d_out: &Matrix) -> Result<(Gradients, Matrix)> {
        if trace.post.len() != self.layers.len() {
            return reject("trace does not match network depth");
        }
        let out = trace.output();
        if d_out.rows() != out.rows() || d_out.cols() != out.cols() {
            return reject(format!(
                "d_out is {}x{}, output is {}x{}",
                d_out.rows(),
                d_out.cols(),
                out.rows(),
                out.cols()
            ));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut d_a = d_out.clone();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let y = &trace.post[idx];
            if y.cols() != layer.out_dim() {
                return reject("trace does not match layer shapes");
            }
            let d_z = d_a.hadamard(&y.map(|v| layer.activation.grad_from_output(v)));
            let a_prev = if idx == 0 {
                &trace.input
            } else {
                &trace.post[idx - 1]
            };
            grads.layers[idx].d_weight = a_prev.transpose().matmul(&d_z);
            grads.layers[idx].d_bias = d_z.column_sums();
            d_a = d_z.matmul(&layer.weight.transpose());
        }
        Ok((grads, d_a))
    }

    pub fn to_snapshot(&self) -> NetSnapshot {
        NetSnapshot {
            layers: self
                .layers
                .iter()
                .map(|l| LayerSnapshot {
                    rows: l.weight.rows(),
                    cols: l.weight.cols(),
                    weights: l.weight.data().to_vec(),
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snap: &NetSnapshot) -> Result<Self> {
        let mut layers = Vec::with_capacity(snap.layers.len());
        for l in &snap.layers {
            layers.push(Layer {
                weight: Matrix::from_vec(l.rows, l.cols, l.weights.clone())?,
                bias: l.bias.clone(),
                activation: l.activation,
            });
        }
        DenseNet::from_layers(layers)
    }
}

/// JSON-serializable parameter snapshot:
/// `{"layers": [{rows, cols, weights, bias, activation}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSnapshot {
    pub layers: Vec<LayerSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSnapshot {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Backward half of a gradient-reversal point: the forward path is the
/// identity, the backward path returns `-lambda * d_out` elementwise.
///
/// `lambda = 0` yields exact zeros (not negative zeros), so a zero
/// coefficient contributes bit-exact nothing downstream.
pub fn grad_reverse(d_out: &Matrix, lambda: f64) -> Matrix {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    if lambda == 0.0 {
        return Matrix::zeros(d_out.rows(), d_out.cols());
    }
    d_out.map(|v| -lambda * v)
}
