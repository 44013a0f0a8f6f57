use alloc::format;

use crate::error::{Error, Result};
use crate::math;

/// Element-wise nonlinearity applied after a layer's affine map.
///
/// `Dropout` scales surviving units by `1 / keep_rate`; its mask is drawn per
/// forward pass and stored in the [`ForwardTrace`](crate::ForwardTrace), so all
/// derivatives are conditional on the realized mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Linear,
    Tanh,
    Sigmoid,
    Relu,
    LeakyRelu { slope: f64 },
    Dropout { keep_rate: f64, mask_seed: u64 },
}

/// Value, first and second derivative of an activation at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl ActivationKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::LeakyRelu { slope } if !(slope.is_finite() && slope >= 0.0) => Err(
                Error::InvalidParameter(format!("leaky relu slope must be finite and >= 0, got {slope}")),
            ),
            ActivationKind::Dropout { keep_rate, .. } if !(keep_rate > 0.0 && keep_rate <= 1.0) => Err(
                Error::InvalidParameter(format!("dropout keep rate must be in (0, 1], got {keep_rate}")),
            ),
            _ => Ok(()),
        }
    }

    /// Evaluates `f(u)`, `f'(u)`, `f''(u)`. For `Dropout`, `mask` is this unit's
    /// mask bit (0 or 1); it is ignored for every other kind.
    ///
    /// ReLU-type kinks use the left derivative at exactly zero, so `Relu` has
    /// `f'(0) = 0`.
    pub fn eval(&self, u: f64, mask: f64) -> ActivationEval {
        let (value, d1, d2) = match *self {
            ActivationKind::Linear => (u, 1.0, 0.0),
            ActivationKind::Tanh => {
                let t = math::tanh(u);
                let s = 1.0 - t * t;
                (t, s, -2.0 * t * s)
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(u);
                let d = s * (1.0 - s);
                (s, d, d * (1.0 - 2.0 * s))
            }
            ActivationKind::Relu => {
                if u > 0.0 {
                    (u, 1.0, 0.0)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
            ActivationKind::LeakyRelu { slope } => {
                if u > 0.0 {
                    (u, 1.0, 0.0)
                } else {
                    (slope * u, slope, 0.0)
                }
            }
            ActivationKind::Dropout { keep_rate, .. } => {
                let d = mask / keep_rate;
                (d * u, d, 0.0)
            }
        };
        ActivationEval { value, d1, d2 }
    }

    #[inline]
    pub fn value(&self, u: f64, mask: f64) -> f64 {
        self.eval(u, mask).value
    }

    #[inline]
    pub fn d1(&self, u: f64, mask: f64) -> f64 {
        self.eval(u, mask).d1
    }

    /// Piecewise-linear activations (`f'' = 0` away from kinks), for which the
    /// Hessian approximation is exact.
    pub fn is_piecewise_linear(&self) -> bool {
        matches!(
            self,
            ActivationKind::Linear
                | ActivationKind::Relu
                | ActivationKind::LeakyRelu { .. }
                | ActivationKind::Dropout { .. }
        )
    }

    pub fn has_kink(&self) -> bool {
        matches!(self, ActivationKind::Relu | ActivationKind::LeakyRelu { .. })
    }

    /// Largest `|f'|` over the real line.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            ActivationKind::Linear | ActivationKind::Tanh | ActivationKind::Relu => 1.0,
            ActivationKind::Sigmoid => 0.25,
            ActivationKind::LeakyRelu { slope } => slope.max(1.0),
            ActivationKind::Dropout { keep_rate, .. } => 1.0 / keep_rate,
        }
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + math::exp(-u))
    } else {
        let e = math::exp(u);
        e / (1.0 + e)
    }
}

/// Free-function form of [`ActivationKind::eval`].
pub fn activation_eval(kind: ActivationKind, u: f64, mask: f64) -> ActivationEval {
    kind.eval(u, mask)
}
