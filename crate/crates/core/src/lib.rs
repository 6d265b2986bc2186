//! Linear programming bounds on spherical codes: first and second level
//! universal lower bounds on h-energy, Levenshtein-type cardinality bounds,
//! and the third-level 600-cell certificate.
//!
//! Polynomials are kept in the monomial basis ([`scalarpoly::Poly`]) but every
//! inner product is taken by evaluating factors pointwise at Gauss nodes of the
//! relevant Jacobi measure ([`orthobasis::OrthoBasis`]), which keeps degree ~35
//! computations at close to machine precision.

pub mod cell600;
pub mod codes;
pub mod error;
pub mod levenshtein;
pub mod liftedulb;
pub mod orthobasis;
pub mod potentials;
pub mod scalarpoly;

pub use error::{Error, Result};

/// Working scalar. Every numeric routine is written against this alias.
pub type Real = f64;
