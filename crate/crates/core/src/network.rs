//! Dense feed-forward networks, traced forward passes and first-order
//! derivatives.
//!
//! Layer `k` maps `z_k` (length `d_k`) to `z_{k+1} = f_k(w_k · z_k + b_k)` with
//! `w_k` of shape `[d_{k+1}, d_k]`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::linalg::{hadamard, Matrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub d_in: usize,
    pub d_out: usize,
    pub activation: ActivationKind,
}

impl LayerSpec {
    pub fn new(d_in: usize, d_out: usize, activation: ActivationKind) -> Self {
        Self { d_in, d_out, activation }
    }

    /// Builds a chained spec from layer widths, e.g. `[784, 128, 10]` gives two
    /// layers. `hidden` is used for every layer except the last, which gets
    /// `output`.
    pub fn chain(widths: &[usize], hidden: ActivationKind, output: ActivationKind) -> Vec<LayerSpec> {
        let n = widths.len().saturating_sub(1);
        (0..n)
            .map(|k| {
                let act = if k + 1 == n { output } else { hidden };
                LayerSpec::new(widths[k], widths[k + 1], act)
            })
            .collect()
    }
}

/// Checks the `LayerSpec` list is non-empty, positive and dimension-chained.
pub fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("network needs at least one layer".into()));
    }
    for (k, s) in specs.iter().enumerate() {
        if s.d_in == 0 || s.d_out == 0 {
            return Err(Error::InvalidParameter(alloc::format!("layer {k} has a zero dimension")));
        }
        s.activation.validate()?;
        if k > 0 && specs[k - 1].d_out != s.d_in {
            return Err(Error::DimensionMismatch {
                context: "layer chaining",
                expected: specs[k - 1].d_out,
                actual: s.d_in,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Shape `[d_out, d_in]`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: ActivationKind,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: ActivationKind) -> Self {
        Self { weights, bias, activation }
    }

    /// Layer with zero bias.
    pub fn unbiased(weights: Matrix, activation: ActivationKind) -> Self {
        let bias = vec![0.0; weights.rows()];
        Self { weights, bias, activation }
    }

    pub fn d_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn d_out(&self) -> usize {
        self.weights.rows()
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec::new(self.d_in(), self.d_out(), self.activation)
    }
}

/// Non-fatal conditions that weaken the small-input analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagnostic {
    /// Sigmoid has `f(0) = 1/2`; the curvature estimates assume `f(0) = 0`.
    SigmoidNotZeroCentered { layer: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Everything recorded by one forward pass. Masks are only present for
/// `Dropout` layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    inputs: Vec<Vec<f64>>,
    preacts: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
}

impl ForwardTrace {
    /// `z_0 ..= z_n`.
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// `u_0 .. u_{n-1}`.
    pub fn preacts(&self) -> &[Vec<f64>] {
        &self.preacts
    }

    pub fn masks(&self) -> &[Option<Vec<f64>>] {
        &self.masks
    }

    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs[k]
    }

    pub fn preact(&self, k: usize) -> &[f64] {
        &self.preacts[k]
    }

    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("trace always holds the input")
    }

    fn mask(&self, k: usize, i: usize) -> f64 {
        self.masks[k].as_ref().map_or(1.0, |m| m[i])
    }
}

/// Per-layer gradients of a scalar with respect to weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let specs: Vec<LayerSpec> = layers.iter().map(Layer::spec).collect();
        validate_specs(&specs)?;
        for l in &layers {
            if l.bias.len() != l.d_out() {
                return Err(Error::DimensionMismatch {
                    context: "bias length",
                    expected: l.d_out(),
                    actual: l.bias.len(),
                });
            }
            if !l.weights.is_finite() || !l.bias.iter().all(|b| b.is_finite()) {
                return Err(Error::NonFinite("network parameters"));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> Result<&Layer> {
        self.layers.get(k).ok_or(Error::IndexOutOfRange {
            context: "layer",
            index: k,
            len: self.layers.len(),
        })
    }

    /// Number of layers `n`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].d_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].d_out()
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn weights(&self, k: usize) -> &Matrix {
        &self.layers[k].weights
    }

    /// Copy of the network with layer `k`'s weights replaced.
    pub fn with_weights(&self, k: usize, weights: Matrix) -> Result<Network> {
        let layer = self.layer(k)?;
        if weights.shape() != layer.weights.shape() {
            return Err(Error::DimensionMismatch {
                context: "replacement weights",
                expected: layer.weights.rows() * layer.weights.cols(),
                actual: weights.rows() * weights.cols(),
            });
        }
        if !weights.is_finite() {
            return Err(Error::NonFinite("replacement weights"));
        }
        let mut net = self.clone();
        net.layers[k].weights = weights;
        Ok(net)
    }

    /// Mutable access for optimizers. Shapes must be preserved.
    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Multiplies every weight matrix by `factor`.
    pub fn scale_weights(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.scale(factor);
        }
    }

    pub fn has_dropout(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l.activation, ActivationKind::Dropout { .. }))
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.activation == ActivationKind::Sigmoid)
            .map(|(layer, _)| Diagnostic::SigmoidNotZeroCentered { layer })
            .collect()
    }

    /// Runs the network on `x` and records every intermediate. Dropout masks are
    /// derived from `dropout_seed` and the layer's own `mask_seed`, so equal
    /// seeds reproduce the same realized network.
    pub fn forward(&self, x: &[f64], dropout_seed: u64) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let n = self.depth();
        let mut inputs = Vec::with_capacity(n + 1);
        let mut preacts = Vec::with_capacity(n);
        let mut masks = Vec::with_capacity(n);
        inputs.push(x.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut u = layer.weights.matvec(&inputs[k]);
            for (ui, bi) in u.iter_mut().zip(&layer.bias) {
                *ui += bi;
            }
            let mask = match layer.activation {
                ActivationKind::Dropout { keep_rate, mask_seed } => {
                    let seed = rng::derive_seed(rng::derive_seed(dropout_seed, mask_seed), k as u64);
                    let mut r = rng::seeded(seed);
                    Some(
                        (0..u.len())
                            .map(|_| if r.random::<f64>() < keep_rate { 1.0 } else { 0.0 })
                            .collect::<Vec<f64>>(),
                    )
                }
                _ => None,
            };
            let z: Vec<f64> = u
                .iter()
                .enumerate()
                .map(|(i, &ui)| layer.activation.value(ui, mask.as_ref().map_or(1.0, |m| m[i])))
                .collect();
            preacts.push(u);
            masks.push(mask);
            inputs.push(z);
        }
        Ok(ForwardTrace { inputs, preacts, masks })
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<()> {
        if trace.preacts.len() != self.depth() {
            return Err(Error::DimensionMismatch {
                context: "trace depth",
                expected: self.depth(),
                actual: trace.preacts.len(),
            });
        }
        Ok(())
    }

    fn check_layer(&self, k: usize, len: usize) -> Result<()> {
        if k >= len {
            return Err(Error::IndexOutOfRange { context: "layer", index: k, len });
        }
        Ok(())
    }

    /// `f'(u_k)` element-wise, with dropout masks applied.
    pub fn slopes(&self, trace: &ForwardTrace, k: usize) -> Vec<f64> {
        let act = self.layers[k].activation;
        trace.preacts[k]
            .iter()
            .enumerate()
            .map(|(i, &u)| act.d1(u, trace.mask(k, i)))
            .collect()
    }

    /// `f''(u_k)` element-wise.
    pub fn curvatures(&self, trace: &ForwardTrace, k: usize) -> Vec<f64> {
        let act = self.layers[k].activation;
        trace.preacts[k]
            .iter()
            .enumerate()
            .map(|(i, &u)| act.eval(u, trace.mask(k, i)).d2)
            .collect()
    }

    /// `J_k = diag(f'(u_k)) · w_k`, shape `[d_{k+1}, d_k]`.
    pub fn layer_jacobian(&self, trace: &ForwardTrace, k: usize) -> Result<Matrix> {
        self.check_trace(trace)?;
        self.check_layer(k, self.depth())?;
        let mut j = self.layers[k].weights.clone();
        j.scale_rows(&self.slopes(trace, k));
        Ok(j)
    }

    /// `J_{n-1} ··· J_k`, shape `[d_n, d_k]`; the identity for `k = n`.
    pub fn output_jacobian(&self, trace: &ForwardTrace, k: usize) -> Result<Matrix> {
        self.check_trace(trace)?;
        self.check_layer(k, self.depth() + 1)?;
        let mut acc = Matrix::identity(self.output_dim());
        for j in (k..self.depth()).rev() {
            acc = acc.matmul(&self.layer_jacobian(trace, j)?);
        }
        Ok(acc)
    }

    /// Applies `J_{to-1} ··· J_from` to `s` (a vector at `z_from`), without
    /// materializing the product.
    pub fn push_forward(&self, trace: &ForwardTrace, from: usize, to: usize, s: &[f64]) -> Vec<f64> {
        let mut v = s.to_vec();
        for j in from..to {
            v = hadamard(&self.slopes(trace, j), &self.layers[j].weights.matvec(&v));
        }
        v
    }

    /// Applies `(J_{to-1} ··· J_from)ᵀ` to `y` (a vector at `z_to`).
    pub fn pull_back(&self, trace: &ForwardTrace, from: usize, to: usize, y: &[f64]) -> Vec<f64> {
        let mut v = y.to_vec();
        for j in (from..to).rev() {
            v = self.layers[j].weights.matvec_t(&hadamard(&self.slopes(trace, j), &v));
        }
        v
    }

    /// Backpropagates `output_grad = ∂L/∂z_n` to every layer's weights and
    /// biases.
    pub fn weight_gradient(&self, trace: &ForwardTrace, output_grad: &[f64]) -> Result<Gradients> {
        self.check_trace(trace)?;
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "output gradient",
                expected: self.output_dim(),
                actual: output_grad.len(),
            });
        }
        let n = self.depth();
        let mut weights = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);
        let mut delta_z = output_grad.to_vec();
        for k in (0..n).rev() {
            let delta_u = hadamard(&self.slopes(trace, k), &delta_z);
            weights.push(Matrix::outer(&delta_u, &trace.inputs[k]));
            delta_z = self.layers[k].weights.matvec_t(&delta_u);
            biases.push(delta_u);
        }
        weights.reverse();
        biases.reverse();
        Ok(Gradients { weights, biases })
    }
}
