use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::matrix::Matrix;
use crate::error::{CntsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = CntsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(CntsError::Config(format!("unknown activation {other:?}"))),
        }
    }
}

/// One fully connected layer: `y = act(W x + b)` with `W` stored row-major as `[out x in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Parameters of a chain of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Per-layer inputs and outputs retained by [`DenseNet::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `activations[0]` is the network input, `activations[k + 1]` the output of layer `k`.
    activations: Vec<Matrix>,
}

impl Trace {
    pub fn output(&self) -> &Matrix {
        self.activations
            .last()
            .expect("trace always holds the input")
    }

    pub fn into_output(mut self) -> Matrix {
        self.activations
            .pop()
            .expect("trace always holds the input")
    }

    pub fn layer_outputs(&self) -> &[Matrix] {
        &self.activations[1..]
    }

    pub fn input(&self) -> &Matrix {
        &self.activations[0]
    }
}

/// Gradients shaped exactly like a [`DenseNet`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            weights: net
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Flattened in checkpoint order: per layer, weights row-major then bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

impl DenseNet {
    /// Uniform fan-average initialisation, `U(-s, s)` with `s = sqrt(6 / (in + out))`, zero biases.
    pub fn init(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        validate_layout(dims, activations)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(pair, &activation)| {
                let (in_dim, out_dim) = (pair[0], pair[1]);
                let scale = (6.0 / (in_dim + out_dim) as f64).sqrt();
                let weights = (0..in_dim * out_dim)
                    .map(|_| rng.gen_range(-scale..=scale))
                    .collect();
                Layer {
                    in_dim,
                    out_dim,
                    weights,
                    bias: vec![0.0; out_dim],
                    activation,
                }
            })
            .collect();
        Ok(DenseNet { layers })
    }

    /// Builds a network from explicit layers, checking that their shapes chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(CntsError::Config("network needs at least one layer".into()));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.in_dim == 0 || layer.out_dim == 0 {
                return Err(CntsError::Config(format!("layer {k} has a zero dimension")));
            }
            if layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.bias.len() != layer.out_dim
            {
                return Err(CntsError::Shape(format!(
                    "layer {k} buffers do not match {}x{}",
                    layer.out_dim, layer.in_dim
                )));
            }
            if k > 0 && layers[k - 1].out_dim != layer.in_dim {
                return Err(CntsError::Shape(format!(
                    "layer {k} expects {} inputs but layer {} emits {}",
                    layer.in_dim,
                    k - 1,
                    layers[k - 1].out_dim
                )));
            }
        }
        Ok(DenseNet { layers })
    }

    /// Rebuilds a network from a flat parameter buffer in checkpoint order.
    pub fn from_flat(dims: &[usize], activations: &[Activation], flat: &[f64]) -> Result<Self> {
        validate_layout(dims, activations)?;
        let expected: usize = dims.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
        if flat.len() != expected {
            return Err(CntsError::Shape(format!(
                "flat buffer has {} parameters, layout needs {expected}",
                flat.len()
            )));
        }
        let mut offset = 0;
        let mut layers = Vec::with_capacity(activations.len());
        for (pair, &activation) in dims.windows(2).zip(activations) {
            let (in_dim, out_dim) = (pair[0], pair[1]);
            let weights = flat[offset..offset + in_dim * out_dim].to_vec();
            offset += in_dim * out_dim;
            let bias = flat[offset..offset + out_dim].to_vec();
            offset += out_dim;
            layers.push(Layer {
                in_dim,
                out_dim,
                weights,
                bias,
                activation,
            });
        }
        Ok(DenseNet { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].in_dim];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Flattened parameters: per layer, weights row-major then bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Mutable references to every parameter in flatten order.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// SHA-256 over the layout and the exact bit patterns of all parameters.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for layer in &self.layers {
            hasher.update((layer.in_dim as u64).to_le_bytes());
            hasher.update((layer.out_dim as u64).to_le_bytes());
            hasher.update(layer.activation.as_str().as_bytes());
            for v in layer.weights.iter().chain(&layer.bias) {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        hex(&hasher.finalize())
    }

    /// Forward pass over a batch `[n x in]`, keeping every layer output.
    pub fn forward(&self, input: &Matrix) -> Result<Trace> {
        if input.cols() != self.input_dim() {
            return Err(CntsError::Shape(format!(
                "input width {} does not match network input {}",
                input.cols(),
                self.input_dim()
            )));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.clone());
        for layer in &self.layers {
            let x = activations.last().expect("non-empty");
            let y = layer_forward(layer, x);
            activations.push(y);
        }
        Ok(Trace { activations })
    }

    /// Output only; skips keeping the intermediate trace alive.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.input_dim() {
            return Err(CntsError::Shape(format!(
                "input width {} does not match network input {}",
                input.cols(),
                self.input_dim()
            )));
        }
        let mut x = layer_forward(&self.layers[0], input);
        for layer in &self.layers[1..] {
            x = layer_forward(layer, &x);
        }
        Ok(x)
    }

    /// Reverse-mode pass: parameter gradients of a scalar loss given `dL/d(output)`.
    pub fn backward(&self, trace: &Trace, output_gradient: &Matrix) -> Result<Gradients> {
        if trace.activations.len() != self.layers.len() + 1 {
            return Err(CntsError::Shape(format!(
                "trace has {} layer outputs, network has {} layers",
                trace.activations.len() - 1,
                self.layers.len()
            )));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            let out = &trace.activations[k + 1];
            if out.cols() != layer.out_dim || trace.activations[k].cols() != layer.in_dim {
                return Err(CntsError::Shape(format!(
                    "trace does not belong to this network (layer {k})"
                )));
            }
        }
        let out = trace.output();
        if output_gradient.shape() != out.shape() {
            return Err(CntsError::Shape(format!(
                "output gradient is {:?}, network output is {:?}",
                output_gradient.shape(),
                out.shape()
            )));
        }

        let batch = out.rows();
        let mut grads = Gradients::zeros_like(self);
        let mut upstream = output_gradient.clone();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let x = &trace.activations[k];
            let y = &trace.activations[k + 1];

            // delta = dL/dy * act'(z), in place
            let mut delta = upstream;
            for (d, &yv) in delta.as_mut_slice().iter_mut().zip(y.as_slice()) {
                *d *= layer.activation.derivative_from_output(yv);
            }

            // dW[out x in] = delta^T [out x n] * x [n x in]
            unsafe {
                matrixmultiply::dgemm(
                    layer.out_dim,
                    batch,
                    layer.in_dim,
                    1.0,
                    delta.as_slice().as_ptr(),
                    1,
                    layer.out_dim as isize,
                    x.as_slice().as_ptr(),
                    layer.in_dim as isize,
                    1,
                    0.0,
                    grads.weights[k].as_mut_ptr(),
                    layer.in_dim as isize,
                    1,
                );
            }
            let db = &mut grads.biases[k];
            for row in delta.iter_rows() {
                for (b, &d) in db.iter_mut().zip(row) {
                    *b += d;
                }
            }

            if k == 0 {
                break;
            }
            // dx[n x in] = delta [n x out] * W [out x in]
            let mut dx = Matrix::zeros(batch, layer.in_dim);
            unsafe {
                matrixmultiply::dgemm(
                    batch,
                    layer.out_dim,
                    layer.in_dim,
                    1.0,
                    delta.as_slice().as_ptr(),
                    layer.out_dim as isize,
                    1,
                    layer.weights.as_ptr(),
                    layer.in_dim as isize,
                    1,
                    0.0,
                    dx.as_mut_slice().as_mut_ptr(),
                    layer.in_dim as isize,
                    1,
                );
            }
            upstream = dx;
        }
        Ok(grads)
    }
}

fn layer_forward(layer: &Layer, x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut y = Matrix::zeros(n, layer.out_dim);
    for row in 0..n {
        y.row_mut(row).copy_from_slice(&layer.bias);
    }
    // y[n x out] += x [n x in] * W^T [in x out]
    unsafe {
        matrixmultiply::dgemm(
            n,
            layer.in_dim,
            layer.out_dim,
            1.0,
            x.as_slice().as_ptr(),
            layer.in_dim as isize,
            1,
            layer.weights.as_ptr(),
            1,
            layer.in_dim as isize,
            1.0,
            y.as_mut_slice().as_mut_ptr(),
            layer.out_dim as isize,
            1,
        );
    }
    if layer.activation != Activation::Identity {
        for v in y.as_mut_slice() {
            *v = layer.activation.apply(*v);
        }
    }
    y
}

fn validate_layout(dims: &[usize], activations: &[Activation]) -> Result<()> {
    if dims.len() < 2 {
        return Err(CntsError::Config(format!(
            "need at least two layer sizes, got {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(CntsError::Config(format!(
            "layer sizes must be positive: {dims:?}"
        )));
    }
    if activations.len() != dims.len() - 1 {
        return Err(CntsError::Config(format!(
            "{} activations given for {} layers",
            activations.len(),
            dims.len() - 1
        )));
    }
    Ok(())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
