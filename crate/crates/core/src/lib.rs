//! Stable parameterization and estimation of causal, invertible VARMA models.
//!
//! Unrestricted real vectors are mapped to Schur-stable autoregressive and
//! moving-average polynomials through positive definite block Toeplitz
//! matrices, so optimizers and samplers can roam freely while every decoded
//! model stays causal and invertible.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod codec;
pub mod linalg;
pub mod model;
pub mod stable;

pub use error::{Error, Result};
