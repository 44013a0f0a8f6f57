//! In-memory datasets and deterministic synthetic data.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};
use crate::loss::Target;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes { labels: Vec<usize>, num_classes: usize },
    /// One row per sample.
    Values(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Matrix,
    targets: Targets,
    name: String,
}

impl Dataset {
    /// `inputs` has one sample per row.
    pub fn new(inputs: Matrix, targets: Targets, name: impl Into<String>) -> Result<Self> {
        let n = inputs.rows();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if !inputs.is_finite() {
            return Err(Error::NonFinite("dataset inputs"));
        }
        match &targets {
            Targets::Classes { labels, num_classes } => {
                if labels.len() != n {
                    return Err(Error::DimensionMismatch {
                        context: "label count",
                        expected: n,
                        actual: labels.len(),
                    });
                }
                if let Some(&bad) = labels.iter().find(|&&c| c >= *num_classes) {
                    return Err(Error::InvalidClass { class: bad, num_classes: *num_classes });
                }
            }
            Targets::Values(m) => {
                if m.rows() != n {
                    return Err(Error::DimensionMismatch {
                        context: "target rows",
                        expected: n,
                        actual: m.rows(),
                    });
                }
                if !m.is_finite() {
                    return Err(Error::NonFinite("dataset targets"));
                }
            }
        }
        Ok(Self { inputs, targets, name: name.into() })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn input(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    pub fn target(&self, i: usize) -> Target<'_> {
        match &self.targets {
            Targets::Classes { labels, .. } => Target::Class(labels[i]),
            Targets::Values(m) => Target::Values(m.row(i)),
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match &self.targets {
            Targets::Classes { num_classes, .. } => Some(*num_classes),
            Targets::Values(_) => None,
        }
    }

    /// Copy with every input multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Dataset {
        let mut out = self.clone();
        out.inputs.scale(factor);
        out
    }

    /// Samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::IndexOutOfRange { context: "dataset", index: bad, len: self.len() });
        }
        let d = self.input_dim();
        let mut inputs = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
        }
        let targets = match &self.targets {
            Targets::Classes { labels, num_classes } => Targets::Classes {
                labels: indices.iter().map(|&i| labels[i]).collect(),
                num_classes: *num_classes,
            },
            Targets::Values(m) => {
                let mut data = Vec::with_capacity(indices.len() * m.cols());
                for &i in indices {
                    data.extend_from_slice(m.row(i));
                }
                Targets::Values(Matrix::from_vec(indices.len(), m.cols(), data)?)
            }
        };
        Dataset::new(Matrix::from_vec(indices.len(), d, inputs)?, targets, self.name.clone())
    }

    /// The first `n` samples (or all of them if fewer).
    pub fn head(&self, n: usize) -> Result<Dataset> {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&idx)
    }

    pub fn max_input_norm(&self) -> f64 {
        (0..self.len()).map(|i| norm(self.input(i))).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Gaussian clusters around basis-vector means, labelled round-robin.
    Blobs,
    /// Targets from a hidden random linear map plus small noise.
    LinReg,
}

/// Deterministic synthetic data where every input satisfies `‖x‖ ≤ scale`.
///
/// `classes_or_dout` is the class count for blobs and the target dimension for
/// regression.
pub fn synth_dataset(
    kind: SynthKind,
    n: usize,
    d_in: usize,
    classes_or_dout: usize,
    scale: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if d_in == 0 || classes_or_dout == 0 || !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "synthetic data needs positive dims and scale (d_in={d_in}, k={classes_or_dout}, scale={scale})"
        )));
    }
    let mut r = rng::seeded(seed);
    match kind {
        SynthKind::Blobs => {
            if classes_or_dout < 2 {
                return Err(Error::InvalidParameter("blobs need at least 2 classes".into()));
            }
            let k = classes_or_dout;
            let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
            let mut inputs = rng::normal_matrix(&mut r, n, d_in, 0.25);
            for (i, &c) in labels.iter().enumerate() {
                // Class c sits on axis c mod d_in, pushed further out on each wrap.
                let axis = c % d_in;
                let radius = 1.0 + (c / d_in) as f64;
                inputs[(i, axis)] += radius;
            }
            let max = (0..n).map(|i| norm(inputs.row(i))).fold(0.0, f64::max);
            if max > 0.0 {
                inputs.scale(scale / max);
            }
            Dataset::new(inputs, Targets::Classes { labels, num_classes: k }, "blobs")
        }
        SynthKind::LinReg => {
            let d_out = classes_or_dout;
            let hidden = rng::normal_matrix(&mut r, d_out, d_in, 1.0 / crate::math::sqrt(d_in as f64));
            let mut inputs = rng::normal_matrix(&mut r, n, d_in, scale / crate::math::sqrt(d_in as f64));
            for i in 0..n {
                let nrm = norm(inputs.row(i));
                if nrm > scale {
                    inputs.row_mut(i).iter_mut().for_each(|a| *a *= scale / nrm);
                }
            }
            let mut targets = Matrix::zeros(n, d_out);
            for i in 0..n {
                let y = hidden.matvec(inputs.row(i));
                let noise = rng::normal_vec(&mut r, d_out);
                for j in 0..d_out {
                    targets[(i, j)] = y[j] + 0.01 * noise[j];
                }
            }
            Dataset::new(inputs, Targets::Values(targets), "linreg")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_dataset() {
        let d = synth_dataset(SynthKind::Blobs, 1, 3, 2, 0.1, 1).unwrap();
        assert_eq!(d.len(), 1);
        assert!(synth_dataset(SynthKind::Blobs, 0, 3, 2, 0.1, 1).is_err());
    }

    #[test]
    fn inputs_respect_the_scale_bound() {
        for kind in [SynthKind::Blobs, SynthKind::LinReg] {
            let d = synth_dataset(kind, 200, 8, 3, 0.1, 5).unwrap();
            assert!(d.max_input_norm() <= 0.1 + 1e-15, "{kind:?}");
        }
    }

    #[test]
    fn same_seed_same_data() {
        for kind in [SynthKind::Blobs, SynthKind::LinReg] {
            let a = synth_dataset(kind, 50, 4, 3, 0.1, 9).unwrap();
            let b = synth_dataset(kind, 50, 4, 3, 0.1, 9).unwrap();
            let c = synth_dataset(kind, 50, 4, 3, 0.1, 10).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn select_and_head() {
        let d = synth_dataset(SynthKind::Blobs, 10, 2, 2, 1.0, 0).unwrap();
        let s = d.select(&[3, 1]).unwrap();
        assert_eq!(s.input(0), d.input(3));
        assert_eq!(s.target(1), d.target(1));
        assert_eq!(d.head(100).unwrap().len(), 10);
        assert!(d.select(&[10]).is_err());
    }

    #[test]
    fn rejects_invalid_labels() {
        let err = Dataset::new(
            Matrix::zeros(2, 1),
            Targets::Classes { labels: alloc::vec![0, 3], num_classes: 2 },
            "x",
        );
        assert!(matches!(err, Err(Error::InvalidClass { .. })));
    }
}
