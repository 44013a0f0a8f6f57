//! Reference implementations used as oracles. They share no code with the
//! library beyond reading network parameters.
#![allow(dead_code)]

use curvinit_core::{rng, ActivationKind, Layer, LossKind, Matrix, Network, Target};

pub fn ref_act(a: ActivationKind, u: f64) -> f64 {
    match a {
        ActivationKind::Linear => u,
        ActivationKind::Tanh => u.tanh(),
        ActivationKind::Sigmoid => 1.0 / (1.0 + (-u).exp()),
        ActivationKind::Relu => u.max(0.0),
        ActivationKind::LeakyRelu { slope } => {
            if u > 0.0 {
                u
            } else {
                slope * u
            }
        }
        ActivationKind::Dropout { .. } => panic!("reference forward has no dropout"),
    }
}

/// Network output from nested loops over the raw parameters.
pub fn ref_output_from(layers: &[(Vec<Vec<f64>>, Vec<f64>, ActivationKind)], x: &[f64]) -> Vec<f64> {
    let mut z = x.to_vec();
    for (w, b, a) in layers {
        z = w
            .iter()
            .zip(b)
            .map(|(row, bi)| ref_act(*a, row.iter().zip(&z).map(|(p, q)| p * q).sum::<f64>() + bi))
            .collect();
    }
    z
}

pub fn raw_layers(net: &Network) -> Vec<(Vec<Vec<f64>>, Vec<f64>, ActivationKind)> {
    net.layers()
        .iter()
        .map(|l| {
            let w = (0..l.d_out()).map(|i| l.weights.row(i).to_vec()).collect();
            (w, l.bias.clone(), l.activation)
        })
        .collect()
}

pub fn ref_output(net: &Network, x: &[f64]) -> Vec<f64> {
    ref_output_from(&raw_layers(net), x)
}

pub fn ref_loss(kind: LossKind, z: &[f64], t: Target<'_>) -> f64 {
    match (kind, t) {
        (LossKind::SquaredError, Target::Values(t)) => z.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum(),
        (LossKind::SoftmaxCrossEntropy { .. }, Target::Class(c)) => {
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + z.iter().map(|a| (a - m).exp()).sum::<f64>().ln() - z[c]
        }
        _ => panic!("mismatched loss and target"),
    }
}

/// Loss with layer `k`'s weight `(i, j)` replaced.
pub fn ref_loss_at(net: &Network, x: &[f64], kind: LossKind, t: Target<'_>, k: usize, i: usize, j: usize, w: f64) -> f64 {
    let mut raw = raw_layers(net);
    raw[k].0[i][j] = w;
    ref_loss(kind, &ref_output_from(&raw, x), t)
}

/// Loss along `w_k + s·g`.
pub fn ref_loss_along(net: &Network, x: &[f64], kind: LossKind, t: Target<'_>, k: usize, g: &Matrix, s: f64) -> f64 {
    let mut raw = raw_layers(net);
    for (i, row) in raw[k].0.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            *w += s * g[(i, j)];
        }
    }
    ref_loss(kind, &ref_output_from(&raw, x), t)
}

/// Gaussian weights with std `gain / √d_in`; zero bias unless `bias_std > 0`.
pub fn random_net(widths: &[usize], hidden: ActivationKind, output: ActivationKind, gain: f64, bias_std: f64, seed: u64) -> Network {
    let mut r = rng::seeded(seed);
    let n = widths.len() - 1;
    let layers = (0..n)
        .map(|k| {
            let (di, d_o) = (widths[k], widths[k + 1]);
            let w = rng::normal_matrix(&mut r, d_o, di, gain / (di as f64).sqrt());
            let b: Vec<f64> = rng::normal_vec(&mut r, d_o).into_iter().map(|v| v * bias_std).collect();
            Layer::new(w, b, if k + 1 == n { output } else { hidden })
        })
        .collect();
    Network::new(layers).unwrap()
}

/// Random vector of the given Euclidean norm.
pub fn random_input(d: usize, norm: f64, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    rng::unit_vec(&mut r, d).into_iter().map(|v| v * norm).collect()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = rng::seeded(seed);
    rng::normal_matrix(&mut r, rows, cols, 1.0)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// `|a - b| <= rtol · max(|a|, |b|) + atol`
pub fn close(a: f64, b: f64, rtol: f64, atol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()) + atol
}

pub const ALL_SMOOTH: [ActivationKind; 3] = [ActivationKind::Linear, ActivationKind::Tanh, ActivationKind::Sigmoid];
