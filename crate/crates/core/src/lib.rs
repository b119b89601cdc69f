//! Numerics for weighted Poisson integrals `K_alpha[F]` on the unit disk.

// `!(x > y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod derivs;
pub mod elliptic;
pub mod error;
pub mod examples;
pub mod kernel;
pub mod norms;
pub mod regimes;
pub mod specfun;

pub use error::{Error, Result};
pub use kernel::{AlphaParam, BoundaryData, ComplexPoint, QuadSpec, C64};
