//! Numerical laboratory for the twisted and mollified fourth moment of
//! Dirichlet L-functions over primitive even characters.
//!
//! The crate computes empirical moments by direct summation over characters,
//! evaluates the predicted closed-form main terms, and unit-verifies the
//! supporting identities (approximate functional equation, orthogonality,
//! multiplicative-sum lemmas, Estermann/Voronoi summation, Kloosterman-sum
//! bounds) at desk scale.

pub mod arith;
pub mod characters;
pub mod error;
pub mod estermann;
pub mod gamma;
pub mod hurwitz;
pub mod identities;
pub mod kloosterman;
pub mod lcentral;
pub mod mainterm;
pub mod par;
pub mod report;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// e(x) = exp(2 pi i x).
pub fn e_of(x: f64) -> Complex64 {
    let (s, c) = (2.0 * std::f64::consts::PI * x).sin_cos();
    Complex64::new(c, s)
}
