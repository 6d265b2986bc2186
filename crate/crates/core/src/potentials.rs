//! Absolutely monotone potentials h(t) on [-1,1) with derivatives of all orders.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalarpoly::{Derivatives, Poly};
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    /// h(t) = (2-2t)^{-s/2}
    Riesz(Real),
    /// Riesz with s = n - 2 on S^{n-1}.
    Newton(usize),
    /// h(t) = exp(a t)
    Exp(Real),
    /// A polynomial, mainly for exact-reproduction tests.
    Poly(Poly),
}

impl Potential {
    pub fn riesz_exponent(&self) -> Option<Real> {
        match self {
            Potential::Riesz(s) => Some(*s),
            Potential::Newton(n) => Some(*n as Real - 2.0),
            _ => None,
        }
    }

    /// h^{(m)}(t).
    pub fn eval(&self, t: Real, m: usize) -> Result<Real> {
        match self {
            Potential::Exp(a) => Ok(a.powi(m as i32) * (a * t).exp()),
            Potential::Poly(p) => Ok(p.eval_deriv(t, m)),
            _ => {
                let s = self.riesz_exponent().unwrap();
                if t >= 1.0 {
                    return Err(Error::Domain(t));
                }
                let u = 2.0 - 2.0 * t;
                let mut v = u.powf(-s / 2.0);
                for j in 1..=m {
                    v *= (s + 2.0 * (j - 1) as Real) / u;
                }
                Ok(v)
            }
        }
    }

    pub fn value(&self, t: Real) -> Result<Real> {
        self.eval(t, 0)
    }

    /// Parses `newton`, `newton(n=<d>)`, `riesz:<s>` or `exp:<a>`; `n` resolves `newton`.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let spec = spec.trim();
        if spec.eq_ignore_ascii_case("newton") {
            return Ok(Potential::Newton(n));
        }
        if let Some(d) = spec.strip_prefix("newton(n=").and_then(|r| r.strip_suffix(')')) {
            let d = d
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad dimension {d:?}: {e}")))?;
            return Ok(Potential::Newton(d));
        }
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad potential {spec:?}")))?;
        let x = Real::from_str(arg.trim())
            .map_err(|e| Error::Parse(format!("bad potential parameter {arg:?}: {e}")))?;
        if !(x > 0.0) {
            return Err(Error::Parse(format!("potential parameter must be positive, got {x}")));
        }
        match kind.trim().to_ascii_lowercase().as_str() {
            "riesz" => Ok(Potential::Riesz(x)),
            "exp" => Ok(Potential::Exp(x)),
            other => Err(Error::Parse(format!("unknown potential {other:?}"))),
        }
    }
}

impl Derivatives for Potential {
    fn derivative(&self, t: Real, m: usize) -> Result<Real> {
        self.eval(t, m)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Riesz(s) => write!(f, "riesz:{s}"),
            Potential::Newton(n) => write!(f, "newton(n={n})"),
            Potential::Exp(a) => write!(f, "exp:{a}"),
            Potential::Poly(p) => write!(f, "poly({p})"),
        }
    }
}
