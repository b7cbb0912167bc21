//! Numerical toolkit for finite linear combinations of reproducing kernels
//! `K_{w,α}(z) = (1 - conj(w) z)^{-α}` on the unit disc.
//!
//! The crate computes the weighted Bergman quadratic form of such
//! combinations, the closed-form derivative of the norm in the weight
//! exponent, the monotone homotopy paths that certify its sign on special
//! classes, and independent quadrature oracles that cross-validate every
//! closed form against the defining disc integrals.

pub mod derivative;
pub mod error;
pub mod gram;
pub mod homotopy;
pub mod kernels;
pub mod quadrature;
pub mod series;

pub use error::{Error, Result};
pub use gram::{EvalVector, GramMatrix, KernelCombo};
pub use kernels::DiscPoint;
