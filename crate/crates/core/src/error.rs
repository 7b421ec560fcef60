use alloc::string::String;

use thiserror::Error;

use crate::scalar::Field;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape too small: {0}")]
    ShapeTooSmall(String),

    #[error("wrong format: {0}")]
    WrongFormat(String),

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("matrix is singular (smallest singular value {smallest_singular_value:e}, largest {largest_singular_value:e})")]
    Singular {
        smallest_singular_value: f64,
        largest_singular_value: f64,
    },

    #[error("matrices {pair:?} do not commute (relative commutator {max_residual:e})")]
    NotCommuting { max_residual: f64, pair: (usize, usize) },

    #[error("matrix {index} is not diagonalizable over {field}")]
    NotDiagonalizable { index: usize, field: Field },

    #[error("no invertible combination found after {trials} trials (best relative smallest singular value {best:e})")]
    NoInvertibleCombination { trials: usize, best: f64 },

    #[error("precondition violated: {what} (residual {residual:e})")]
    Precondition { what: &'static str, residual: f64 },

    #[error("{what}: residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("term {term} has leading weight w_(i,1) = 0 within tolerance")]
    ZeroLeadingWeight { term: usize },

    #[error("flavor mismatch: {0}")]
    FlavorMismatch(String),

    #[error("tensor is not orthogonally decomposable for flavor {0}")]
    NotOdeco(String),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("invalid tolerance policy: {0}")]
    InvalidPolicy(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
