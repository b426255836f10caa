//! Sparse higher-order PCA via geometric column selection.
//!
//! Decomposes a dense N-way tensor into a Tucker model whose per-mode factor
//! bases are built from a small, explicitly selected subset of columns of each
//! mode unfolding. Column subsets are found by an exact binary tree search
//! under a cardinality cap and accumulated no-good cuts; a truncated-PCA
//! separation oracle decides whether a candidate subset reconstructs its own
//! columns within a tolerance. The tolerance can be derived a priori from
//! classical PCA residuals, which also yields a computable upper bound on the
//! final reconstruction error for data whose residual energy concentrates on
//! few columns.
//!
//! The crate ships the decomposition pipeline, a dense HOSVD baseline, the
//! evaluation harnesses (synthetic support recovery, projection classification,
//! image reconstruction) and readers/writers for the on-disk formats used by
//! the `geohopca` CLI (NPY tensors, PPM images, IDX digit data, CSV metrics).
//!
//! ```
//! use geohopca::shopca::{sparse_geo_hopca, ShopcaConfig};
//! use geohopca::tensor::{DenseTensor, Shape};
//!
//! let shape = Shape::new(vec![4, 3, 2]).unwrap();
//! let data: Vec<f64> = (0..24).map(|i| (i as f64).sin()).collect();
//! let x = DenseTensor::new(shape, data).unwrap();
//! let config = ShopcaConfig::new(vec![1, 1, 1], vec![2, 2, 2]);
//! let result = sparse_geo_hopca(&x, &config).unwrap();
//! assert_eq!(result.core.shape().dims(), &[1, 1, 1]);
//! ```

pub mod experiments;
pub mod io;
pub mod pca;
pub mod rng;
pub mod select;
pub mod shopca;
pub mod tensor;

use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("rank {r} out of range (must be in 1..={max})")]
    RankOutOfRange { r: usize, max: usize },

    #[error("support is empty")]
    EmptySupport,

    #[error("column index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("eigensolver failed to converge within the iteration cap")]
    EigenNoConvergence,

    #[error("search node budget of {budget} exhausted")]
    NodeBudgetExhausted { budget: u64 },

    #[error("{p} columns exceeds the enumeration guard of {max}")]
    TooManyColumns { p: usize, max: usize },

    #[error("mode {mode}: {source}")]
    InMode {
        mode: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed {format} data: {detail}")]
    Format {
        format: &'static str,
        detail: String,
    },
}

impl Error {
    pub(crate) fn in_mode(mode: usize, source: Error) -> Self {
        Error::InMode {
            mode,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
