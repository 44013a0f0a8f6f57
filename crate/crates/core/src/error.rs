use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range for {context} (len {len})")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("class index {class} out of range for {num_classes} classes")]
    InvalidClass { class: usize, num_classes: usize },

    #[error("target kind does not match loss {0}")]
    TargetMismatch(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("sequence is constant; correlation is undefined")]
    DegenerateSequence,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("no scale in [2^-20, 2^20] brackets target eigenvalue {target} (eigenvalue at the bound: {last})")]
    BracketNotFound { target: f64, last: f64 },

    #[error("calibration did not reach tolerance after {iterations} bisections (best eigenvalue {best})")]
    NotConverged { iterations: usize, best: f64 },

    #[error("training diverged at batch {batch}")]
    Divergence { batch: usize },
}
