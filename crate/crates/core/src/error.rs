use thiserror::Error;

use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("constant polynomial has no roots")]
    ConstantPolynomial,
    #[error("potential is singular at t = {0}")]
    Domain(Real),
    #[error("cardinality N = {0} must be at least 2")]
    Cardinality(Real),
    #[error("s = {0} must lie in [-1, 1)")]
    Separation(Real),
    #[error("unknown code {0:?}")]
    UnknownCode(String),
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("singular linear system: {0}")]
    Singular(&'static str),
    #[error("interpolant existence condition failed (det = {0:e})")]
    Existence(Real),
    #[error("polynomial not admissible: {0}")]
    Inadmissible(String),
    #[error("no second level bound: {0}")]
    NoLift(String),
    #[error("root extraction failed: {0}")]
    Roots(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
