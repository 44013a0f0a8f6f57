//! Curvature-aware initialization for dense feed-forward networks.
//!
//! The crate computes cheap approximations of the loss Hessian with respect to
//! the weights of a single layer. For a direction `g` shaped like the layer's
//! weight matrix the approximation is
//!
//! ```text
//! H[g, g] ~= v' * H_z * v,    v = B * diag(f'(u)) * g * z
//! ```
//!
//! where `z` is the layer input, `u` its pre-activation, `B` the Jacobian of the
//! network output with respect to the layer output and `H_z` the Hessian of the
//! loss with respect to the network output. The dropped term is third order in
//! the input scale and vanishes for piecewise-linear activations.
//!
//! Finite-difference oracles ([`curvature::fd_quadform`], [`curvature::fd_hvp`])
//! provide the exact reference, and [`init::calibrate_to_unit_hessian`] uses
//! power iteration on the approximation to pick a weight scale with a top
//! Hessian eigenvalue close to one.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod activation;
pub mod curvature;
pub mod data;
mod error;
pub mod init;
pub mod linalg;
pub mod loss;
mod math;
pub mod network;
pub mod rng;
pub mod stats;
pub mod train;

pub use activation::ActivationKind;
pub use curvature::{CurvatureProbe, QuadformReport};
pub use data::{Dataset, Targets};
pub use error::{Error, Result};
pub use init::{BaseScheme, InitScheme};
pub use linalg::Matrix;
pub use loss::{LossKind, Target};
pub use network::{ForwardTrace, Layer, LayerSpec, Network};
pub use train::TrainConfig;
