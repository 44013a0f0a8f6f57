//! Per-layer loss curvature.
//!
//! For layer `k` with input `z`, pre-activation `u` and a direction `g` shaped
//! like `w_k`, the directional derivative of the network output is
//!
//! ```text
//! v = B_{k+1} · diag(f'(u)) · (g · z)
//! ```
//!
//! with `B_{k+1}` the Jacobian of `z_n` with respect to `z_{k+1}`. The
//! approximate quadratic form is `vᵀ · H_z · v`; it drops the term
//! `∂L/∂z_n · ∂²z_n/∂w_k²[g, g]`, which is third order in the input scale and
//! zero for piecewise-linear activations away from kinks.
//!
//! The finite-difference oracles perturb `w_k` only and differentiate the true
//! loss, so they measure the full Hessian including the dropped term.

use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, hadamard, Matrix};
use crate::loss::{LossKind, Target};
use crate::math;
use crate::network::{Diagnostic, ForwardTrace, Network};
use crate::rng;

/// Floor for the rtol denominator.
pub const RTOL_FLOOR: f64 = 1e-12;

/// Exact values below this magnitude make rtol meaningless; such probes are
/// reported as degenerate.
pub const DEGENERATE_EXACT: f64 = 1e-10;

/// Multiple of the FD-induced perturbation that every ReLU pre-activation must
/// clear for the FD oracle to stay on one linear piece.
pub const KINK_MARGIN: f64 = 10.0;

/// A direction in the weight space of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProbe {
    pub layer: usize,
    /// Same shape as the layer's weights.
    pub direction: Matrix,
}

impl CurvatureProbe {
    pub fn new(layer: usize, direction: Matrix) -> Self {
        Self { layer, direction }
    }

    /// Standard-normal direction rescaled to unit Frobenius norm.
    pub fn random(net: &Network, layer: usize, seed: u64) -> Result<Self> {
        let w = &net.layer(layer)?.weights;
        let mut r = rng::seeded(seed);
        let dir = rng::unit_vec(&mut r, w.rows() * w.cols());
        Ok(Self::new(layer, Matrix::from_vec(w.rows(), w.cols(), dir)?))
    }

    pub fn check(&self, net: &Network) -> Result<()> {
        let w = &net.layer(self.layer)?.weights;
        if w.shape() != self.direction.shape() {
            return Err(Error::DimensionMismatch {
                context: "probe direction",
                expected: w.rows() * w.cols(),
                actual: self.direction.rows() * self.direction.cols(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self::new(self.layer, self.direction.scaled(alpha))
    }
}

/// Approximate curvature compared against the FD oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadformReport {
    pub approx: f64,
    pub exact_fd: Option<f64>,
    pub rtol: Option<f64>,
    pub warnings: Vec<Diagnostic>,
}

impl QuadformReport {
    pub fn approx_only(approx: f64) -> Self {
        Self { approx, exact_fd: None, rtol: None, warnings: Vec::new() }
    }

    pub fn compared(approx: f64, exact: f64) -> Self {
        Self {
            approx,
            exact_fd: Some(exact),
            rtol: Some(relative_error(approx, exact)),
            warnings: Vec::new(),
        }
    }

    pub fn with_warnings(mut self, warnings: Vec<Diagnostic>) -> Self {
        self.warnings = warnings;
        self
    }

    /// True when the exact value is too close to zero for rtol to be useful.
    pub fn is_degenerate(&self) -> bool {
        self.exact_fd.is_some_and(|e| math::abs(e) < DEGENERATE_EXACT)
    }
}

/// `|approx - exact| / max(|exact|, RTOL_FLOOR)`.
pub fn relative_error(approx: f64, exact: f64) -> f64 {
    math::abs(approx - exact) / math::abs(exact).max(RTOL_FLOOR)
}

fn check_probe(net: &Network, trace: &ForwardTrace, probe: &CurvatureProbe) -> Result<()> {
    probe.check(net)?;
    if trace.preacts().len() != net.depth() {
        return Err(Error::DimensionMismatch {
            context: "trace depth",
            expected: net.depth(),
            actual: trace.preacts().len(),
        });
    }
    Ok(())
}

/// `v = B_{k+1} · diag(f'(u_k)) · g · z_k`, the output tangent along the probe.
pub fn output_tangent(net: &Network, trace: &ForwardTrace, probe: &CurvatureProbe) -> Result<Vec<f64>> {
    check_probe(net, trace, probe)?;
    let k = probe.layer;
    let s = probe.direction.matvec(trace.input(k));
    let a = net.slopes(trace, k);
    Ok(net.push_forward(trace, k + 1, net.depth(), &hadamard(&a, &s)))
}

/// Approximate Hessian quadratic form `vᵀ H_z v` for one sample.
pub fn approx_quadform(
    net: &Network,
    trace: &ForwardTrace,
    kind: LossKind,
    t: Target<'_>,
    probe: &CurvatureProbe,
) -> Result<f64> {
    let v = output_tangent(net, trace, probe)?;
    let hv = kind.hessian_vec(trace.output(), t, &v)?;
    Ok(dot(&v, &hv))
}

/// Hessian-vector product of the approximate Hessian:
/// `(diag(f') Bᵀ H_z B diag(f') (g · z)) ⊗ z`.
pub fn approx_hvp(
    net: &Network,
    trace: &ForwardTrace,
    kind: LossKind,
    t: Target<'_>,
    probe: &CurvatureProbe,
) -> Result<Matrix> {
    let k = probe.layer;
    let v = output_tangent(net, trace, probe)?;
    let hv = kind.hessian_vec(trace.output(), t, &v)?;
    let back = net.pull_back(trace, k + 1, net.depth(), &hv);
    let r = hadamard(&net.slopes(trace, k), &back);
    Ok(Matrix::outer(&r, trace.input(k)))
}

/// Fully linearized tangent: the layer input is replaced by the Jacobian
/// product `J_{k-1} ··· J_0 · z_0`.
pub fn factorized_v(net: &Network, trace: &ForwardTrace, probe: &CurvatureProbe) -> Result<Vec<f64>> {
    check_probe(net, trace, probe)?;
    let k = probe.layer;
    let z_lin = net.push_forward(trace, 0, k, trace.input(0));
    let s = probe.direction.matvec(&z_lin);
    let a = net.slopes(trace, k);
    Ok(net.push_forward(trace, k + 1, net.depth(), &hadamard(&a, &s)))
}

/// Default FD step `1e-3 · max(1, ‖w_k‖) / ‖g‖`.
pub fn default_fd_step(net: &Network, probe: &CurvatureProbe) -> f64 {
    let w = net.weights(probe.layer).frobenius_norm();
    let g = probe.direction.frobenius_norm();
    if g == 0.0 {
        return 1e-3;
    }
    1e-3 * w.max(1.0) / g
}

fn perturbed(net: &Network, probe: &CurvatureProbe, step: f64) -> Result<Network> {
    let mut w = net.weights(probe.layer).clone();
    w.axpy(step, &probe.direction);
    net.with_weights(probe.layer, w)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("FD step must be positive, got {eps}")));
    }
    Ok(())
}

/// `L(w + εg) - 2 L(w) + L(w - εg)` for one sample; see
/// [`LossKind::second_difference`].
fn sample_second_difference(
    nets: [&Network; 3],
    x: &[f64],
    kind: LossKind,
    t: Target<'_>,
    dropout_seed: u64,
) -> Result<f64> {
    let [center, plus, minus] = nets;
    let z = center.forward(x, dropout_seed)?.output().to_vec();
    let disp = |net: &Network| -> Result<Vec<f64>> {
        let tr = net.forward(x, dropout_seed)?;
        Ok(tr.output().iter().zip(&z).map(|(a, b)| a - b).collect())
    };
    let s = kind.second_difference(&z, &disp(plus)?, &disp(minus)?, t)?;
    if !s.is_finite() {
        return Err(Error::NonFinite("loss under perturbation"));
    }
    Ok(s)
}

/// Central second difference of the loss along the probe,
/// `(L(w + εg) - 2 L(w) + L(w - εg)) / ε²`, all other layers fixed.
///
/// Dropout masks are pinned by `dropout_seed` so the three evaluations see the
/// same realized network.
pub fn fd_quadform(
    net: &Network,
    x: &[f64],
    kind: LossKind,
    t: Target<'_>,
    probe: &CurvatureProbe,
    eps: f64,
    dropout_seed: u64,
) -> Result<f64> {
    probe.check(net)?;
    check_eps(eps)?;
    let plus = perturbed(net, probe, eps)?;
    let minus = perturbed(net, probe, -eps)?;
    Ok(sample_second_difference([net, &plus, &minus], x, kind, t, dropout_seed)? / (eps * eps))
}

fn layer_gradient(
    net: &Network,
    x: &[f64],
    kind: LossKind,
    t: Target<'_>,
    layer: usize,
    dropout_seed: u64,
) -> Result<Matrix> {
    let trace = net.forward(x, dropout_seed)?;
    let l = kind.value(trace.output(), t)?;
    if !l.is_finite() {
        return Err(Error::NonFinite("loss under perturbation"));
    }
    let dz = kind.gradient(trace.output(), t)?;
    let mut grads = net.weight_gradient(&trace, &dz)?;
    Ok(grads.weights.swap_remove(layer))
}

/// Central difference of the layer gradient,
/// `(∇L(w + εg) - ∇L(w - εg)) / (2ε)`.
pub fn fd_hvp(
    net: &Network,
    x: &[f64],
    kind: LossKind,
    t: Target<'_>,
    probe: &CurvatureProbe,
    eps: f64,
    dropout_seed: u64,
) -> Result<Matrix> {
    probe.check(net)?;
    check_eps(eps)?;
    let k = probe.layer;
    let mut gp = layer_gradient(&perturbed(net, probe, eps)?, x, kind, t, k, dropout_seed)?;
    let gm = layer_gradient(&perturbed(net, probe, -eps)?, x, kind, t, k, dropout_seed)?;
    gp.axpy(-1.0, &gm);
    gp.scale(0.5 / eps);
    Ok(gp)
}

/// Approximate curvature plus the FD reference and warnings for one sample.
pub fn quadform_report(
    net: &Network,
    x: &[f64],
    kind: LossKind,
    t: Target<'_>,
    probe: &CurvatureProbe,
    eps: f64,
    dropout_seed: u64,
) -> Result<QuadformReport> {
    let trace = net.forward(x, dropout_seed)?;
    let approx = approx_quadform(net, &trace, kind, t, probe)?;
    let exact = fd_quadform(net, x, kind, t, probe, eps, dropout_seed)?;
    Ok(QuadformReport::compared(approx, exact).with_warnings(net.diagnostics()))
}

/// Checks that an FD step of `eps` along the probe cannot move any ReLU-type
/// pre-activation across its kink, with `KINK_MARGIN` to spare.
pub fn kink_safe(net: &Network, trace: &ForwardTrace, probe: &CurvatureProbe, eps: f64) -> bool {
    KINK_MARGIN * eps < kink_clearance(net, trace, probe)
}

/// Largest step along the probe that provably keeps every ReLU-type
/// pre-activation on its side of the kink (`inf` if nothing can cross).
///
/// The first-order perturbation of `u_k` per unit step is `|g · z_k|`; it is
/// pushed through later layers with `|w|` and each activation's Lipschitz
/// bound, which bounds the true change as long as no kink has been crossed.
pub fn kink_clearance(net: &Network, trace: &ForwardTrace, probe: &CurvatureProbe) -> f64 {
    let k = probe.layer;
    let mut du: Vec<f64> = probe.direction.matvec(trace.input(k)).into_iter().map(math::abs).collect();
    let mut clearance = f64::INFINITY;
    for j in k..net.depth() {
        let layer = &net.layers()[j];
        if layer.activation.has_kink() {
            for (&u, &d) in trace.preact(j).iter().zip(&du) {
                if d > 0.0 {
                    clearance = clearance.min(math::abs(u) / d);
                } else if u == 0.0 {
                    clearance = 0.0;
                }
            }
        }
        if j + 1 < net.depth() {
            let lip = layer.activation.lipschitz();
            let dz: Vec<f64> = du.iter().map(|d| lip * d).collect();
            let w = &net.layers()[j + 1].weights;
            du = (0..w.rows())
                .map(|i| w.row(i).iter().zip(&dz).map(|(a, b)| math::abs(*a) * b).sum())
                .collect();
        }
    }
    clearance
}

/// Largest algebraic eigenvalue of a symmetric, possibly indefinite operator.
///
/// Runs [`top_eigenvalue`]; if the dominant eigenvalue `μ` is negative, reruns
/// it on `H - μI`, whose spectrum is non-negative with the same top
/// eigenvector.
pub fn largest_eigenvalue<F>(mut hvp: F, shape: (usize, usize), iters: usize, tol: f64, seed: u64) -> Result<EigenEstimate>
where
    F: FnMut(&Matrix) -> Result<Matrix>,
{
    let first = top_eigenvalue(&mut hvp, shape, iters, tol, seed)?;
    if first.value >= 0.0 {
        return Ok(first);
    }
    let mu = first.value;
    let shifted = top_eigenvalue(
        |g| {
            let mut h = hvp(g)?;
            h.axpy(-mu, g);
            Ok(h)
        },
        shape,
        iters,
        tol,
        seed,
    )?;
    Ok(EigenEstimate { value: shifted.value + mu, iterations: first.iterations + shifted.iterations })
}

/// Result of power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
}

/// Dominant eigenvalue of a symmetric operator on `[rows, cols]` matrices by
/// power iteration from a seeded Gaussian start.
///
/// Stops when successive Rayleigh quotients differ by less than `tol`, when the
/// eigen-residual `‖Hx - λx‖` drops below `tol`, or after `iters` operator
/// applications. A start whose first Rayleigh quotient is below `1e-14` is
/// redrawn once; an operator that returns exactly zero yields eigenvalue 0.
pub fn top_eigenvalue<F>(mut hvp: F, shape: (usize, usize), iters: usize, tol: f64, seed: u64) -> Result<EigenEstimate>
where
    F: FnMut(&Matrix) -> Result<Matrix>,
{
    if iters == 0 {
        return Err(Error::InvalidParameter("power iteration needs at least one iteration".into()));
    }
    let (rows, cols) = shape;
    if rows * cols == 0 {
        return Err(Error::InvalidParameter("power iteration on an empty shape".into()));
    }
    let mut r = rng::seeded(seed);
    let mut apply = |x: &Matrix| -> Result<Matrix> {
        let y = hvp(x)?;
        if y.shape() != x.shape() {
            return Err(Error::DimensionMismatch {
                context: "operator output",
                expected: rows * cols,
                actual: y.rows() * y.cols(),
            });
        }
        if !y.is_finite() {
            return Err(Error::NonFinite("operator output"));
        }
        Ok(y)
    };

    let mut x = Matrix::from_vec(rows, cols, rng::unit_vec(&mut r, rows * cols))?;
    let mut y = apply(&x)?;
    if y.frobenius_norm() == 0.0 {
        return Ok(EigenEstimate { value: 0.0, iterations: 1 });
    }
    let mut lambda = x.inner(&y);
    if math::abs(lambda) < 1e-14 {
        x = Matrix::from_vec(rows, cols, rng::unit_vec(&mut r, rows * cols))?;
        y = apply(&x)?;
        if y.frobenius_norm() == 0.0 {
            return Ok(EigenEstimate { value: 0.0, iterations: 1 });
        }
        lambda = x.inner(&y);
    }

    let mut it = 1;
    loop {
        let mut resid = y.clone();
        resid.axpy(-lambda, &x);
        if resid.frobenius_norm() <= tol || it >= iters {
            return Ok(EigenEstimate { value: lambda, iterations: it });
        }
        let ny = y.frobenius_norm();
        if ny == 0.0 {
            return Ok(EigenEstimate { value: 0.0, iterations: it });
        }
        x = y.scaled(1.0 / ny);
        y = apply(&x)?;
        it += 1;
        let next = x.inner(&y);
        if math::abs(next - lambda) < tol {
            return Ok(EigenEstimate { value: next, iterations: it });
        }
        lambda = next;
    }
}

/// Spectral norm of `J_to ··· J_from`, by power iteration on `PᵀP` with the
/// factors applied one at a time.
pub fn jacobian_product_norm(net: &Network, trace: &ForwardTrace, from_layer: usize, to_layer: usize) -> Result<f64> {
    let n = net.depth();
    if to_layer >= n {
        return Err(Error::IndexOutOfRange { context: "to_layer", index: to_layer, len: n });
    }
    if from_layer > to_layer {
        return Err(Error::InvalidParameter(alloc::format!(
            "from_layer {from_layer} exceeds to_layer {to_layer}"
        )));
    }
    let d = net.layers()[from_layer].d_in();
    let est = top_eigenvalue(
        |x| {
            let y = net.push_forward(trace, from_layer, to_layer + 1, x.as_slice());
            let back = net.pull_back(trace, from_layer, to_layer + 1, &y);
            Matrix::from_vec(1, d, back)
        },
        (1, d),
        2000,
        1e-13,
        0x5EED,
    )?;
    Ok(math::sqrt(est.value.max(0.0)))
}

/// The batch-mean approximate Hessian of one layer, with forward traces cached
/// so repeated products (power iteration, probing) only pay for the Jacobian
/// pushes.
#[derive(Debug, Clone)]
pub struct LayerHessian<'a> {
    net: &'a Network,
    data: &'a Dataset,
    kind: LossKind,
    layer: usize,
    traces: Vec<ForwardTrace>,
}

impl<'a> LayerHessian<'a> {
    /// Uses the first `min(sample_limit, |data|)` samples. Sample `i` is traced
    /// with dropout seed `i`.
    pub fn new(net: &'a Network, data: &'a Dataset, kind: LossKind, layer: usize, sample_limit: usize) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if sample_limit == 0 {
            return Err(Error::InvalidParameter("sample_limit must be at least 1".into()));
        }
        net.layer(layer)?;
        let m = sample_limit.min(data.len());
        let traces = (0..m)
            .map(|i| net.forward(data.input(i), i as u64))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { net, data, kind, layer, traces })
    }

    pub fn samples(&self) -> usize {
        self.traces.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.net.weights(self.layer).shape()
    }

    fn probe(&self, g: &Matrix) -> CurvatureProbe {
        CurvatureProbe::new(self.layer, g.clone())
    }

    /// Mean of the per-sample approximate quadratic forms, summed in index order.
    pub fn quadform(&self, g: &Matrix) -> Result<f64> {
        let probe = self.probe(g);
        let mut acc = 0.0;
        for (i, trace) in self.traces.iter().enumerate() {
            acc += approx_quadform(self.net, trace, self.kind, self.data.target(i), &probe)?;
        }
        Ok(acc / self.samples() as f64)
    }

    pub fn hvp(&self, g: &Matrix) -> Result<Matrix> {
        let probe = self.probe(g);
        let (rows, cols) = self.shape();
        let mut acc = Matrix::zeros(rows, cols);
        for (i, trace) in self.traces.iter().enumerate() {
            acc.axpy(1.0, &approx_hvp(self.net, trace, self.kind, self.data.target(i), &probe)?);
        }
        acc.scale(1.0 / self.samples() as f64);
        Ok(acc)
    }

    pub fn top_eigenvalue(&self, iters: usize, tol: f64, seed: u64) -> Result<EigenEstimate> {
        top_eigenvalue(|g| self.hvp(g), self.shape(), iters, tol, seed)
    }

    /// FD second difference of the batch-mean loss.
    pub fn fd_quadform(&self, g: &Matrix, eps: f64) -> Result<f64> {
        let probe = self.probe(g);
        probe.check(self.net)?;
        check_eps(eps)?;
        let plus = perturbed(self.net, &probe, eps)?;
        let minus = perturbed(self.net, &probe, -eps)?;
        let mut acc = 0.0;
        for i in 0..self.samples() {
            let nets = [self.net, &plus, &minus];
            acc += sample_second_difference(nets, self.data.input(i), self.kind, self.data.target(i), i as u64)?;
        }
        Ok(acc / self.samples() as f64 / (eps * eps))
    }

    /// FD product with the exact batch-mean Hessian.
    pub fn fd_hvp(&self, g: &Matrix, eps: f64) -> Result<Matrix> {
        let probe = self.probe(g);
        let (rows, cols) = self.shape();
        let mut acc = Matrix::zeros(rows, cols);
        for i in 0..self.samples() {
            let h = fd_hvp(self.net, self.data.input(i), self.kind, self.data.target(i), &probe, eps, i as u64)?;
            acc.axpy(1.0, &h);
        }
        acc.scale(1.0 / self.samples() as f64);
        Ok(acc)
    }

    /// Largest eigenvalue of the FD Hessian (see [`largest_eigenvalue`]), with
    /// the default step taken relative to the unit-norm iterates.
    pub fn fd_top_eigenvalue(&self, iters: usize, tol: f64, seed: u64) -> Result<EigenEstimate> {
        let eps = 1e-3 * self.net.weights(self.layer).frobenius_norm().max(1.0);
        largest_eigenvalue(|g| self.fd_hvp(g, eps), self.shape(), iters, tol, seed)
    }

    /// True when every sample's trace is kink-safe for this probe and step.
    pub fn kink_safe(&self, g: &Matrix, eps: f64) -> bool {
        let probe = self.probe(g);
        self.traces.iter().all(|t| kink_safe(self.net, t, &probe, eps))
    }
}

/// Batch-mean approximate quadratic form over the first `sample_limit` samples.
pub fn batch_quadform(
    net: &Network,
    data: &Dataset,
    kind: LossKind,
    probe: &CurvatureProbe,
    sample_limit: usize,
) -> Result<f64> {
    probe.check(net)?;
    LayerHessian::new(net, data, kind, probe.layer, sample_limit)?.quadform(&probe.direction)
}

/// Batch-mean FD quadratic form over the first `sample_limit` samples.
pub fn batch_fd_quadform(
    net: &Network,
    data: &Dataset,
    kind: LossKind,
    probe: &CurvatureProbe,
    sample_limit: usize,
    eps: f64,
) -> Result<f64> {
    probe.check(net)?;
    LayerHessian::new(net, data, kind, probe.layer, sample_limit)?.fd_quadform(&probe.direction, eps)
}
