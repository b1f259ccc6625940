//! Numerical toolkit for conformal maps `S^{n-1} → S^{n-1}`: Möbius
//! geometry, spherical quadrature, the conformal deficit and degree,
//! band-limited identities, Möbius fitting and the flat sharpness family.
//!
//! Start with the runnable programs under `examples/`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod sphere;
pub mod field;
pub mod functionals;
pub mod fit;
pub mod experiments;
