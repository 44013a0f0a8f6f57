//! Losses with value, gradient and Hessian with respect to the network output.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `‖z - t‖²` against a dense target vector.
    SquaredError,
    /// `-log softmax(z)[t]` against a class index.
    SoftmaxCrossEntropy { num_classes: usize },
}

/// Borrowed target for a single sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<'a> {
    Values(&'a [f64]),
    Class(usize),
}

impl LossKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossKind::SoftmaxCrossEntropy { num_classes } if num_classes < 2 => Err(Error::InvalidParameter(
                format!("cross entropy needs at least 2 classes, got {num_classes}"),
            )),
            _ => Ok(()),
        }
    }

    fn check(&self, z: &[f64], t: Target<'_>) -> Result<()> {
        self.validate()?;
        match (*self, t) {
            (LossKind::SquaredError, Target::Values(v)) => {
                if v.len() != z.len() {
                    return Err(Error::DimensionMismatch {
                        context: "squared error target",
                        expected: z.len(),
                        actual: v.len(),
                    });
                }
                Ok(())
            }
            (LossKind::SoftmaxCrossEntropy { num_classes }, Target::Class(c)) => {
                if z.len() != num_classes {
                    return Err(Error::DimensionMismatch {
                        context: "cross entropy logits",
                        expected: num_classes,
                        actual: z.len(),
                    });
                }
                if c >= num_classes {
                    return Err(Error::InvalidClass { class: c, num_classes });
                }
                Ok(())
            }
            (LossKind::SquaredError, _) => Err(Error::TargetMismatch("squared error expects a value vector")),
            (LossKind::SoftmaxCrossEntropy { .. }, _) => {
                Err(Error::TargetMismatch("cross entropy expects a class index"))
            }
        }
    }

    pub fn value(&self, z: &[f64], t: Target<'_>) -> Result<f64> {
        self.check(z, t)?;
        Ok(match (*self, t) {
            (LossKind::SquaredError, Target::Values(v)) => z.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum(),
            (LossKind::SoftmaxCrossEntropy { .. }, Target::Class(c)) => log_sum_exp(z) - z[c],
            _ => unreachable!("checked above"),
        })
    }

    pub fn gradient(&self, z: &[f64], t: Target<'_>) -> Result<Vec<f64>> {
        self.check(z, t)?;
        Ok(match (*self, t) {
            (LossKind::SquaredError, Target::Values(v)) => z.iter().zip(v).map(|(a, b)| 2.0 * (a - b)).collect(),
            (LossKind::SoftmaxCrossEntropy { .. }, Target::Class(c)) => {
                let mut p = softmax(z);
                p[c] -= 1.0;
                p
            }
            _ => unreachable!("checked above"),
        })
    }

    /// `L(z + d₊) - 2 L(z) + L(z + d₋)`, formed from the output displacements
    /// so that small curvature is not lost to cancellation between nearly
    /// equal loss values. Large displacements fall back to the direct formula.
    pub fn second_difference(&self, z: &[f64], d_plus: &[f64], d_minus: &[f64], t: Target<'_>) -> Result<f64> {
        self.check(z, t)?;
        for d in [d_plus, d_minus] {
            if d.len() != z.len() {
                return Err(Error::DimensionMismatch { context: "output displacement", expected: z.len(), actual: d.len() });
            }
        }
        let small = d_plus.iter().chain(d_minus).all(|d| math::abs(*d) <= 1.0);
        Ok(match (*self, t) {
            (LossKind::SquaredError, Target::Values(v)) => z
                .iter()
                .zip(v)
                .zip(d_plus.iter().zip(d_minus))
                .map(|((zi, ti), (p, m))| 2.0 * (zi - ti) * (p + m) + p * p + m * m)
                .sum(),
            (LossKind::SoftmaxCrossEntropy { .. }, Target::Class(c)) if small => {
                // lse(z + d) - lse(z) = log1p(Σ pᵢ·expm1(dᵢ))
                let p = softmax(z);
                let shift = |d: &[f64]| math::ln_1p(p.iter().zip(d).map(|(pi, di)| pi * math::expm1(*di)).sum());
                shift(d_plus) + shift(d_minus) - (d_plus[c] + d_minus[c])
            }
            (LossKind::SoftmaxCrossEntropy { .. }, Target::Class(_)) => {
                let at = |d: &[f64]| -> Result<f64> {
                    let zd: Vec<f64> = z.iter().zip(d).map(|(a, b)| a + b).collect();
                    self.value(&zd, t)
                };
                at(d_plus)? - 2.0 * self.value(z, t)? + at(d_minus)?
            }
            _ => unreachable!("checked above"),
        })
    }

    /// `D²_z L`; `2·I` for squared error and `diag(p) - p pᵀ` for cross entropy.
    pub fn hessian(&self, z: &[f64], t: Target<'_>) -> Result<Matrix> {
        self.check(z, t)?;
        let d = z.len();
        Ok(match *self {
            LossKind::SquaredError => Matrix::identity(d).scaled(2.0),
            LossKind::SoftmaxCrossEntropy { .. } => {
                let p = softmax(z);
                Matrix::from_fn(d, d, |i, j| if i == j { p[i] - p[i] * p[i] } else { -p[i] * p[j] })
            }
        })
    }

    /// `D²_z L · v` without forming the matrix.
    pub fn hessian_vec(&self, z: &[f64], t: Target<'_>, v: &[f64]) -> Result<Vec<f64>> {
        self.check(z, t)?;
        Ok(match *self {
            LossKind::SquaredError => v.iter().map(|a| 2.0 * a).collect(),
            LossKind::SoftmaxCrossEntropy { .. } => {
                let p = softmax(z);
                let pv = dot(&p, v);
                p.iter().zip(v).map(|(pi, vi)| pi * (vi - pv)).collect()
            }
        })
    }
}

pub fn loss_eval(kind: LossKind, z: &[f64], t: Target<'_>) -> Result<f64> {
    kind.value(z, t)
}

pub fn loss_grad(kind: LossKind, z: &[f64], t: Target<'_>) -> Result<Vec<f64>> {
    kind.gradient(z, t)
}

pub fn loss_hessian(kind: LossKind, z: &[f64], t: Target<'_>) -> Result<Matrix> {
    kind.hessian(z, t)
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + math::ln(z.iter().map(|&a| math::exp(a - m)).sum::<f64>())
}

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&a| math::exp(a - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|a| a / s).collect()
}
