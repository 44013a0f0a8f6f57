//! Pearson correlation with permutation p-values, the gradient-correlation
//! experiment, and Monte-Carlo checks of the random-matrix norm identities
//! behind the initialization schemes.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::init::{initialize, InitScheme};
use crate::linalg::dot;
use crate::loss::{LossKind, Target};
use crate::math;
use crate::network::{LayerSpec, Network};
use crate::rng;

/// Pearson correlation of two centered sequences, cached for repeated
/// permutation of the second one.
struct Centered {
    x: Vec<f64>,
    y: Vec<f64>,
    denom: f64,
}

impl Centered {
    fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                context: "correlation sequences",
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        if xs.len() < 3 {
            return Err(Error::InvalidParameter(alloc::format!(
                "correlation needs at least 3 samples, got {}",
                xs.len()
            )));
        }
        let center = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| a - m).collect::<Vec<f64>>()
        };
        let x = center(xs);
        let y = center(ys);
        let (sx, sy) = (dot(&x, &x), dot(&y, &y));
        // Centered sums of a constant sequence are exact zeros or rounding dust.
        let scale = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        if sx <= 1e-28 * scale(xs).max(f64::MIN_POSITIVE) || sy <= 1e-28 * scale(ys).max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateSequence);
        }
        Ok(Self { x, y, denom: math::sqrt(sx * sy) })
    }

    fn r(&self) -> f64 {
        (dot(&self.x, &self.y) / self.denom).clamp(-1.0, 1.0)
    }
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    Ok(Centered::new(xs, ys)?.r())
}

/// Two-sided permutation p-value for `|r|`,
/// `(1 + #{|r_perm| >= |r_obs|}) / (n_perm + 1)`, permuting `ys` with a stream
/// seeded by `seed`.
pub fn permutation_p_value(xs: &[f64], ys: &[f64], n_perm: usize, seed: u64) -> Result<f64> {
    Ok(correlation_test(xs, ys, n_perm, seed)?.p_value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub r: f64,
    pub p_value: f64,
    pub n_samples: usize,
    pub n_permutations: usize,
}

pub const MIN_PERMUTATIONS: usize = 100;

/// Pearson `r` with its permutation p-value.
pub fn correlation_test(xs: &[f64], ys: &[f64], n_perm: usize, seed: u64) -> Result<CorrelationReport> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::InvalidParameter(alloc::format!(
            "permutation test needs at least {MIN_PERMUTATIONS} permutations, got {n_perm}"
        )));
    }
    let c = Centered::new(xs, ys)?;
    let r_obs = c.r();
    // Ties within rounding count as at least as extreme.
    let threshold = math::abs(r_obs) * (1.0 - 1e-12);
    let mut r = rng::seeded(seed);
    let mut y = c.y.clone();
    let mut hits = 0usize;
    for _ in 0..n_perm {
        y.shuffle(&mut r);
        if math::abs(dot(&c.x, &y) / c.denom) >= threshold {
            hits += 1;
        }
    }
    Ok(CorrelationReport {
        r: r_obs,
        p_value: (1 + hits) as f64 / (n_perm + 1) as f64,
        n_samples: xs.len(),
        n_permutations: n_perm,
    })
}

/// A scalar read off one initialized network at the experiment's data point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// `∂L/∂z_n[index]`
    LossGrad { index: usize },
    /// `z_n[index]`
    Output { index: usize },
    /// `J_layer[row, col] = ∂z_{layer+1}[row] / ∂z_layer[col]`
    LayerJacobian { layer: usize, row: usize, col: usize },
    /// `∂z_n[output] / ∂w_layer[row, col]`
    WeightJacobian { layer: usize, output: usize, row: usize, col: usize },
    /// `w_layer[row, col]`
    Weight { layer: usize, row: usize, col: usize },
}

/// How components are fed to Pearson's r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// The components themselves.
    Raw,
    /// Absolute values. Under sign symmetry of the initialization (odd
    /// activations, zero biases) raw components can be dependent yet exactly
    /// uncorrelated; their magnitudes are not.
    Magnitude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSetup {
    pub pairs: Vec<(Component, Component)>,
    pub pairing: Pairing,
    pub n_seeds: usize,
    pub n_inits: usize,
    pub n_perm: usize,
    pub seed: u64,
}

/// One report per (seed, pair), seed-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairReport {
    pub seed_index: usize,
    pub pair_index: usize,
    pub report: CorrelationReport,
}

fn read_component(
    c: Component,
    net: &Network,
    trace: &crate::network::ForwardTrace,
    loss_grad: &[f64],
) -> Result<f64> {
    let oob = |context, index, len| Error::IndexOutOfRange { context, index, len };
    match c {
        Component::LossGrad { index } => loss_grad.get(index).copied().ok_or(oob("loss gradient", index, loss_grad.len())),
        Component::Output { index } => {
            let z = trace.output();
            z.get(index).copied().ok_or(oob("output", index, z.len()))
        }
        Component::LayerJacobian { layer, row, col } => {
            let w = &net.layer(layer)?.weights;
            if row >= w.rows() || col >= w.cols() {
                return Err(oob("jacobian entry", row * w.cols() + col, w.rows() * w.cols()));
            }
            Ok(net.slopes(trace, layer)[row] * w[(row, col)])
        }
        Component::WeightJacobian { layer, output, row, col } => {
            let w = &net.layer(layer)?.weights;
            if row >= w.rows() || col >= w.cols() || output >= net.output_dim() {
                return Err(oob("weight jacobian entry", row * w.cols() + col, w.rows() * w.cols()));
            }
            let mut e = alloc::vec![0.0; w.rows()];
            e[row] = net.slopes(trace, layer)[row] * trace.input(layer)[col];
            Ok(net.push_forward(trace, layer + 1, net.depth(), &e)[output])
        }
        Component::Weight { layer, row, col } => {
            let w = &net.layer(layer)?.weights;
            if row >= w.rows() || col >= w.cols() {
                return Err(oob("weight entry", row * w.cols() + col, w.rows() * w.cols()));
            }
            Ok(w[(row, col)])
        }
    }
}

/// Re-initializes the network `n_inits` times per seed at a fixed data point,
/// records each component pair, and tests each pair for correlation.
pub fn correlation_experiment(
    spec: &[LayerSpec],
    scheme: &InitScheme,
    kind: LossKind,
    data_point: &[f64],
    target: Target<'_>,
    setup: &CorrelationSetup,
) -> Result<Vec<PairReport>> {
    if setup.n_inits < MIN_PERMUTATIONS {
        return Err(Error::InvalidParameter(alloc::format!(
            "correlation experiment needs at least {MIN_PERMUTATIONS} initializations per seed"
        )));
    }
    let mut out = Vec::with_capacity(setup.n_seeds * setup.pairs.len());
    for s in 0..setup.n_seeds {
        let seed = rng::derive_seed(setup.seed, s as u64);
        let mut cols: Vec<(Vec<f64>, Vec<f64>)> = setup
            .pairs
            .iter()
            .map(|_| (Vec::with_capacity(setup.n_inits), Vec::with_capacity(setup.n_inits)))
            .collect();
        for i in 0..setup.n_inits {
            let net = initialize(spec, scheme, rng::derive_seed(seed, i as u64))?;
            let trace = net.forward(data_point, i as u64)?;
            let g = kind.gradient(trace.output(), target)?;
            for ((a, b), (xs, ys)) in setup.pairs.iter().zip(cols.iter_mut()) {
                xs.push(read_component(*a, &net, &trace, &g)?);
                ys.push(read_component(*b, &net, &trace, &g)?);
            }
        }
        for (p, (mut xs, mut ys)) in cols.into_iter().enumerate() {
            if setup.pairing == Pairing::Magnitude {
                xs.iter_mut().for_each(|a| *a = math::abs(*a));
                ys.iter_mut().for_each(|a| *a = math::abs(*a));
            }
            let report = correlation_test(&xs, &ys, setup.n_perm, rng::derive_seed(seed, 0xC0FF_EE00 + p as u64))?;
            out.push(PairReport { seed_index: s, pair_index: p, report });
        }
    }
    Ok(out)
}

/// Monte-Carlo estimate of `E‖w·z‖² / ‖z‖²` for `w` of shape `[n, m]` with
/// i.i.d. `N(0, σ²)` entries and random unit `z`. The identity predicts `nσ²`.
pub fn forward_norm_factor(n: usize, m: usize, sigma: f64, trials: usize, seed: u64) -> f64 {
    let mut r = rng::seeded(seed);
    let mut acc = 0.0;
    for _ in 0..trials {
        let w = rng::normal_matrix(&mut r, n, m, sigma);
        let z = rng::unit_vec(&mut r, m);
        let y = w.matvec(&z);
        acc += dot(&y, &y);
    }
    acc / trials as f64
}

/// Monte-Carlo estimate of `E‖z'·w‖² / ‖z'‖²` for random unit `z'` of length
/// `n`. The identity predicts `mσ²`.
pub fn backward_norm_factor(n: usize, m: usize, sigma: f64, trials: usize, seed: u64) -> f64 {
    let mut r = rng::seeded(seed);
    let mut acc = 0.0;
    for _ in 0..trials {
        let w = rng::normal_matrix(&mut r, n, m, sigma);
        let z = rng::unit_vec(&mut r, n);
        let y = w.matvec_t(&z);
        acc += dot(&y, &y);
    }
    acc / trials as f64
}

/// `E‖max(u, 0)‖² / E‖u‖²` for `u = w·z` with symmetric zero-mean `w`.
pub fn relu_forward_factor(n: usize, m: usize, trials: usize, seed: u64) -> f64 {
    let mut r = rng::seeded(seed);
    let (mut kept, mut total) = (0.0, 0.0);
    for _ in 0..trials {
        let w = rng::normal_matrix(&mut r, n, m, 1.0 / math::sqrt(n as f64));
        let z = rng::unit_vec(&mut r, m);
        for u in w.matvec(&z) {
            total += u * u;
            let v = ActivationKind::Relu.value(u, 1.0);
            kept += v * v;
        }
    }
    kept / total
}

/// `E‖diag(B)/keep · z‖² / ‖z‖²` with `B_i ~ Bernoulli(keep)`: the squared-norm
/// factor of a dropout Jacobian. Its expectation is `1 / keep`.
pub fn dropout_jacobian_factor(d: usize, keep_rate: f64, trials: usize, seed: u64) -> f64 {
    let mut r = rng::seeded(seed);
    let mut acc = 0.0;
    for _ in 0..trials {
        let z = rng::unit_vec(&mut r, d);
        let y: Vec<f64> = z
            .iter()
            .map(|&a| if r.random::<f64>() < keep_rate { a / keep_rate } else { 0.0 })
            .collect();
        acc += dot(&y, &y);
    }
    acc / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn perfect_and_orthogonal_correlations() {
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson_r(&[1.0, -1.0, 1.0, -1.0], &[1.0, 1.0, -1.0, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(pearson_r(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateSequence));
        assert_eq!(pearson_r(&[0.1, 0.1, 0.1, 0.1], &[1.0, 2.0, 3.0, 4.0]), Err(Error::DegenerateSequence));
        assert!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
        assert_eq!(
            permutation_p_value(&[1.0; 20], &(0..20).map(f64::from).collect::<Vec<_>>(), 999, 0),
            Err(Error::DegenerateSequence)
        );
    }

    #[test]
    fn perfect_correlation_has_minimal_p_value() {
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let p = permutation_p_value(&xs, &xs, 999, 1).unwrap();
        assert_eq!(p, 1.0 / 1000.0);
    }

    #[test]
    fn too_few_permutations_rejected() {
        let xs = vec![1.0, 2.0, 3.0, 4.0];
        assert!(permutation_p_value(&xs, &xs, 99, 0).is_err());
    }
}
