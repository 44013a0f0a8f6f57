//! Variance-based initialization schemes and Hessian calibration.
//!
//! The base schemes keep the norm of Jacobian products stable: forward products
//! need `Var[w_k] = 1/d_{k+1}`, backward products `1/d_k`, and Glorot takes the
//! harmonic compromise `2/(d_k + d_{k+1})`. ReLU halves the squared forward norm
//! (correction `σ/√2`), and dropout with keep rate `1-p` is corrected by
//! `σ/√(1-p)`.
//!
//! [`calibrate_to_unit_hessian`] goes one step further and picks a single global
//! multiplier on top of the base scheme so that the dominant eigenvalue of the
//! approximate loss Hessian of one layer is close to a target (1 by default),
//! making a unit step size admissible at initialization.

use alloc::format;
use alloc::vec::Vec;

use crate::activation::ActivationKind;
use crate::curvature::LayerHessian;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::math;
use crate::network::{validate_specs, Layer, LayerSpec, Network};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseScheme {
    /// `√(2 / (d_in + d_out))`
    Glorot,
    /// `√(1 / d_out)`
    ForwardStable,
    /// `√(1 / d_in)`
    BackwardStable,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitScheme {
    base: BaseScheme,
    relu_correction: bool,
    dropout_correction: bool,
}

impl InitScheme {
    pub fn new(base: BaseScheme, relu_correction: bool, dropout_correction: bool) -> Result<Self> {
        if let BaseScheme::Fixed(std) = base {
            if !(std > 0.0 && std.is_finite()) {
                return Err(Error::InvalidParameter(format!("fixed std must be positive, got {std}")));
            }
        }
        Ok(Self { base, relu_correction, dropout_correction })
    }

    pub fn plain(base: BaseScheme) -> Result<Self> {
        Self::new(base, false, false)
    }

    pub fn glorot() -> Self {
        Self { base: BaseScheme::Glorot, relu_correction: false, dropout_correction: false }
    }

    pub fn base(&self) -> BaseScheme {
        self.base
    }

    pub fn relu_correction(&self) -> bool {
        self.relu_correction
    }

    pub fn dropout_correction(&self) -> bool {
        self.dropout_correction
    }
}

/// Standard deviation for the weights of `layer`. Corrections look at the
/// activation applied to this layer's pre-activation.
pub fn scheme_std(scheme: &InitScheme, layer: &LayerSpec) -> f64 {
    let (d_in, d_out) = (layer.d_in as f64, layer.d_out as f64);
    let mut std = match scheme.base {
        BaseScheme::Glorot => math::sqrt(2.0 / (d_in + d_out)),
        BaseScheme::ForwardStable => math::sqrt(1.0 / d_out),
        BaseScheme::BackwardStable => math::sqrt(1.0 / d_in),
        BaseScheme::Fixed(std) => std,
    };
    match layer.activation {
        ActivationKind::Relu if scheme.relu_correction => std /= math::sqrt(2.0),
        ActivationKind::Dropout { keep_rate, .. } if scheme.dropout_correction => std /= math::sqrt(keep_rate),
        _ => {}
    }
    std
}

/// Weights `N(0, σ²)` with `σ` from [`scheme_std`], zero biases. Layer `k`
/// draws from its own stream derived from `seed`.
pub fn initialize(spec: &[LayerSpec], scheme: &InitScheme, seed: u64) -> Result<Network> {
    initialize_scaled(spec, scheme, seed, 1.0)
}

/// [`initialize`] with every layer's standard deviation multiplied by `scale`.
/// The underlying normal draws do not depend on `scale`.
pub fn initialize_scaled(spec: &[LayerSpec], scheme: &InitScheme, seed: u64, scale: f64) -> Result<Network> {
    validate_specs(spec)?;
    let layers: Vec<Layer> = spec
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut r = rng::seeded(rng::derive_seed(seed, k as u64));
            let std = scale * scheme_std(scheme, s);
            Layer::unbiased(rng::normal_matrix(&mut r, s.d_out, s.d_in, std), s.activation)
        })
        .collect();
    Network::new(layers)
}

/// Knobs for [`calibrate_to_unit_hessian`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Layer whose Hessian is calibrated.
    pub layer: usize,
    pub target: f64,
    /// Accept eigenvalues in `[target / (1 + tol), target · (1 + tol)]`.
    pub tol: f64,
    pub max_bisect: usize,
    pub seed: u64,
    /// Samples averaged into the batch Hessian.
    pub sample_limit: usize,
    pub power_iters: usize,
    pub power_tol: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            layer: 0,
            target: 1.0,
            tol: 0.1,
            max_bisect: 40,
            seed: 0,
            sample_limit: 64,
            power_iters: 300,
            power_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Global multiplier on the base scheme's standard deviations.
    pub scale: f64,
    pub eigenvalue: f64,
    pub network: Network,
}

const MIN_SCALE_EXP: i32 = -20;
const MAX_SCALE_EXP: i32 = 20;

/// Finds a global weight scale `s` such that the dominant eigenvalue of the
/// batch-mean approximate Hessian at `opts.layer` lands within `opts.tol` of
/// `opts.target`.
///
/// The scale is bracketed by doubling or halving from 1 within
/// `[2^-20, 2^20]`, then bisected geometrically. Failure to straddle the target
/// is reported as [`Error::BracketNotFound`] (e.g. single-layer regression,
/// whose Hessian does not depend on the weights).
pub fn calibrate_to_unit_hessian(
    spec: &[LayerSpec],
    base: &InitScheme,
    data: &Dataset,
    kind: LossKind,
    opts: &CalibrationOptions,
) -> Result<Calibration> {
    validate_specs(spec)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(opts.target > 0.0 && opts.target.is_finite()) || !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "calibration needs positive target and tol (target={}, tol={})",
            opts.target, opts.tol
        )));
    }
    if opts.layer >= spec.len() {
        return Err(Error::IndexOutOfRange { context: "calibration layer", index: opts.layer, len: spec.len() });
    }
    let unit = initialize(spec, base, opts.seed)?;
    let power_seed = rng::derive_seed(opts.seed, 0xCA1B);
    let eig_at = |s: f64| -> Result<(f64, Network)> {
        let mut net = unit.clone();
        net.scale_weights(s);
        let e = LayerHessian::new(&net, data, kind, opts.layer, opts.sample_limit)?
            .top_eigenvalue(opts.power_iters, opts.power_tol * opts.target, power_seed)?
            .value;
        if !e.is_finite() {
            return Err(Error::NonFinite("calibration eigenvalue"));
        }
        Ok((e, net))
    };
    let lo_bound = opts.target / (1.0 + opts.tol);
    let hi_bound = opts.target * (1.0 + opts.tol);
    let accept = |e: f64| e >= lo_bound && e <= hi_bound;

    let (e1, net1) = eig_at(1.0)?;
    if accept(e1) {
        return Ok(Calibration { scale: 1.0, eigenvalue: e1, network: net1 });
    }

    // (scale, eigenvalue) on either side of the target.
    let mut below;
    let mut above;
    let growing = e1 < opts.target;
    let mut prev = (1.0, e1);
    let mut exp = 0;
    loop {
        exp += if growing { 1 } else { -1 };
        if !(MIN_SCALE_EXP..=MAX_SCALE_EXP).contains(&exp) {
            return Err(Error::BracketNotFound { target: opts.target, last: prev.1 });
        }
        let s = libm::exp2(exp as f64);
        let (e, net) = eig_at(s)?;
        if accept(e) {
            return Ok(Calibration { scale: s, eigenvalue: e, network: net });
        }
        if growing && e > opts.target {
            below = prev;
            above = (s, e);
            break;
        }
        if !growing && e < opts.target {
            below = (s, e);
            above = prev;
            break;
        }
        prev = (s, e);
    }

    let mut best = if (below.1 - opts.target).abs() < (above.1 - opts.target).abs() { below.1 } else { above.1 };
    for _ in 0..opts.max_bisect {
        let mid = math::sqrt(below.0 * above.0);
        let (e, net) = eig_at(mid)?;
        if accept(e) {
            return Ok(Calibration { scale: mid, eigenvalue: e, network: net });
        }
        if (e - opts.target).abs() < (best - opts.target).abs() {
            best = e;
        }
        if e < opts.target {
            below = (mid, e);
        } else {
            above = (mid, e);
        }
    }
    Err(Error::NotConverged { iterations: opts.max_bisect, best })
}
