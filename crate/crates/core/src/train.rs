//! Plain mini-batch SGD.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::loss::LossKind;
use crate::network::Network;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Inputs are multiplied by this before entering the network.
    pub input_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, epochs: 2, batch_size: 32, seed: 0, input_scale: 1.0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate must be >= 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be at least 1".into()));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("input scale must be positive, got {}", self.input_scale)));
        }
        Ok(())
    }
}

/// Trains with `w ← w − lr · ∇L_batch`, where `L_batch` is the mean loss over
/// the batch. Only weights are updated; biases stay at their initial values.
///
/// The sample order is reshuffled every epoch from `cfg.seed`, and every batch
/// draws fresh dropout masks. Returns the trained network and the mean loss of
/// each batch (evaluated before that batch's update).
pub fn train_sgd(net: &Network, data: &Dataset, kind: LossKind, cfg: &TrainConfig) -> Result<(Network, Vec<f64>)> {
    cfg.validate()?;
    kind.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.input_dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "training inputs",
            expected: net.input_dim(),
            actual: data.input_dim(),
        });
    }
    let mut net = net.clone();
    let n = data.len();
    let batches_per_epoch = n.div_ceil(cfg.batch_size);
    let mut history = Vec::with_capacity(cfg.epochs * batches_per_epoch);
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = rng::seeded(cfg.seed);
    let mut x = alloc::vec![0.0; data.input_dim()];
    let mut batch_index = 0usize;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch_seed = rng::derive_seed(cfg.seed, 0xBA7C_0000 + batch_index as u64);
            let mut grads: Vec<Matrix> = net.layers().iter().map(|l| Matrix::zeros(l.d_out(), l.d_in())).collect();
            let mut loss_sum = 0.0;
            for (j, &i) in chunk.iter().enumerate() {
                for (xi, &a) in x.iter_mut().zip(data.input(i)) {
                    *xi = a * cfg.input_scale;
                }
                let trace = net.forward(&x, rng::derive_seed(batch_seed, j as u64))?;
                let t = data.target(i);
                loss_sum += kind.value(trace.output(), t)?;
                let dz = kind.gradient(trace.output(), t)?;
                for (acc, g) in grads.iter_mut().zip(net.weight_gradient(&trace, &dz)?.weights) {
                    acc.axpy(1.0, &g);
                }
            }
            let m = chunk.len() as f64;
            let loss = loss_sum / m;
            if !loss.is_finite() {
                return Err(Error::Divergence { batch: batch_index });
            }
            history.push(loss);
            for (layer, g) in net.layers_mut().iter_mut().zip(&grads) {
                layer.weights.axpy(-cfg.learning_rate / m, g);
            }
            if !net.layers().iter().all(|l| l.weights.is_finite()) {
                return Err(Error::Divergence { batch: batch_index });
            }
            batch_index += 1;
        }
    }
    Ok((net, history))
}
