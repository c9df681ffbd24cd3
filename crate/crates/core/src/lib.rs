//! Construction of three orthogonal projections whose iterated products,
//! applied in a suitable order to a unit vector, do not converge, together
//! with numerical certificates for every step of the construction.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod exponent;
pub mod gram;
pub mod hilbert;
pub mod proj;
pub mod synthesis;

pub use error::{Error, Result};
