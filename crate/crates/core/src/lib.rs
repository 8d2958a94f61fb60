//! Sharp constants of Hardy inequalities with mixed weights `|y|^a |z|^{-b}`
//! on cones of `R^d = R^k × R^{d-k}`, together with numerical certificates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod params;
pub mod quadrature;
pub mod spherical;
pub mod verifier;

pub use error::{HardyError, Result};
pub use params::*;
pub use quadrature::*;
pub use spherical::*;
pub use verifier::*;
