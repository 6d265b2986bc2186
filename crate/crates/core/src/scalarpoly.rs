//! Dense real polynomials, root extraction, confluent divided differences and
//! Hermite interpolation on multisets.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Polynomial in the monomial basis, constant term first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<Real>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Real>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![0.0] }
    }

    pub fn constant(c: Real) -> Self {
        Poly::new(vec![c])
    }

    /// `t - a`
    pub fn linear_root(a: Real) -> Self {
        Poly::new(vec![-a, 1.0])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Real]) -> Self {
        roots
            .iter()
            .fold(Poly::constant(1.0), |p, &a| p.mul_linear(a))
    }

    pub fn coeffs(&self) -> &[Real] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> Real {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn eval(&self, t: Real) -> Real {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// m-th derivative at t.
    pub fn eval_deriv(&self, t: Real, m: usize) -> Real {
        if m > self.degree() {
            return 0.0;
        }
        let mut acc = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate().skip(m).rev() {
            acc = acc * t + c * falling(i, m);
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.degree() == 0 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as Real)
                .collect(),
        )
    }

    pub fn scale(&self, s: Real) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `self * (t - a)`
    pub fn mul_linear(&self, a: Real) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i + 1] += c;
            out[i] -= a * c;
        }
        Poly::new(out)
    }

    /// Synthetic division by `t - a`: returns (quotient, remainder).
    pub fn div_linear(&self, a: Real) -> (Poly, Real) {
        let d = self.degree();
        if d == 0 {
            return (Poly::zero(), self.coeffs[0]);
        }
        let mut q = vec![0.0; d];
        let mut acc = 0.0;
        for i in (0..=d).rev() {
            acc = acc * a + self.coeffs[i];
            if i > 0 {
                q[i - 1] = acc;
            }
        }
        (Poly::new(q), acc)
    }

    /// Max absolute coefficient.
    pub fn norm_inf(&self) -> Real {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

fn falling(i: usize, m: usize) -> Real {
    (0..m).map(|j| (i - j) as Real).product()
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && self.degree() > 0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", c.abs())?,
                1 => write!(f, "{}*t", c.abs())?,
                _ => write!(f, "{}*t^{}", c.abs(), i)?,
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let len = self.coeffs.len().max(o.coeffs.len());
        let get = |v: &[Real], i: usize| v.get(i).copied().unwrap_or(0.0);
        Poly::new(
            (0..len)
                .map(|i| get(&self.coeffs, i) + get(&o.coeffs, i))
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        self + &(-o)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, o: Poly) -> Poly {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Product of `(t - r)` over the given roots, evaluated pointwise.
pub fn prod_eval(roots: &[Real], t: Real) -> Real {
    roots.iter().map(|r| t - r).product()
}

/// m Chebyshev-Lobatto points on [a, b], endpoints included, increasing.
pub fn chebyshev_grid(a: Real, b: Real, m: usize) -> Vec<Real> {
    if m < 2 {
        return vec![a];
    }
    (0..m)
        .map(|i| {
            let c = (std::f64::consts::PI * i as Real / (m - 1) as Real).cos();
            0.5 * (a + b) - 0.5 * (b - a) * c
        })
        .collect()
}

/// Real roots (sorted, multiple roots repeated) and the number of complex
/// conjugate pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Roots {
    pub real: Vec<Real>,
    pub complex_pairs: usize,
    pub tol: Real,
}

impl Roots {
    /// All roots real and pairwise separated by more than `tol`.
    pub fn all_real_simple(&self) -> bool {
        self.complex_pairs == 0 && self.real.windows(2).all(|w| w[1] - w[0] > self.tol)
    }
}

/// Companion-matrix eigenvalues, then Newton polishing of the real ones.
/// Roots closer than `tol` stay as a repeated (multiple) root.
pub fn roots(p: &Poly, tol: Real) -> Result<Roots> {
    let d = p.degree();
    if d == 0 {
        return Err(Error::ConstantPolynomial);
    }
    let lead = p.leading();
    let c: Vec<Real> = p.coeffs().iter().map(|x| x / lead).collect();
    let mut m = DMatrix::<Real>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        m[(i, d - 1)] = -c[i];
    }
    let eig = m.complex_eigenvalues();
    let dp = p.derivative();
    let mut real = Vec::new();
    let mut complex = 0usize;
    for z in eig.iter() {
        if z.im.abs() > 1e-6 * z.re.abs().max(1.0) {
            complex += 1;
            continue;
        }
        real.push(polish(p, &dp, z.re));
    }
    if complex % 2 != 0 {
        return Err(Error::Roots(format!(
            "odd number of complex eigenvalues for {p}"
        )));
    }
    real.sort_by(|a, b| a.total_cmp(b));
    Ok(Roots {
        real,
        complex_pairs: complex / 2,
        tol,
    })
}

fn polish(p: &Poly, dp: &Poly, mut x: Real) -> Real {
    let mut fx = p.eval(x).abs();
    for _ in 0..20 {
        let d = dp.eval(x);
        if d == 0.0 {
            break;
        }
        let y = x - p.eval(x) / d;
        let fy = p.eval(y).abs();
        if !(fy < fx) {
            break;
        }
        x = y;
        fx = fy;
    }
    x
}

/// Anything that can report derivatives of all orders pointwise.
pub trait Derivatives {
    fn derivative(&self, t: Real, m: usize) -> Result<Real>;
}

impl Derivatives for Poly {
    fn derivative(&self, t: Real, m: usize) -> Result<Real> {
        Ok(self.eval_deriv(t, m))
    }
}

impl Derivatives for NewtonPoly {
    fn derivative(&self, t: Real, m: usize) -> Result<Real> {
        Ok(self.eval_derivs(t, m)[m])
    }
}

/// Sorted distinct nodes with multiplicities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multiset {
    nodes: Vec<(Real, usize)>,
}

impl Multiset {
    /// Builds from (value, multiplicity) pairs; equal values merge.
    pub fn new(pairs: &[(Real, usize)]) -> Self {
        let mut v: Vec<(Real, usize)> = pairs.iter().copied().filter(|p| p.1 > 0).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nodes: Vec<(Real, usize)> = Vec::with_capacity(v.len());
        for (x, m) in v {
            match nodes.last_mut() {
                Some(last) if last.0 == x => last.1 += m,
                _ => nodes.push((x, m)),
            }
        }
        Multiset { nodes }
    }

    /// Each value doubled.
    pub fn doubled(values: &[Real]) -> Self {
        Self::new(&values.iter().map(|&x| (x, 2)).collect::<Vec<_>>())
    }

    pub fn nodes(&self) -> &[(Real, usize)] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().map(|p| p.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Flat list t_0, t_1, ... with repeated nodes adjacent.
    pub fn flatten(&self) -> Vec<Real> {
        self.nodes
            .iter()
            .flat_map(|&(x, m)| std::iter::repeat_n(x, m))
            .collect()
    }
}

/// Newton coefficients h[t_0], h[t_0,t_1], ..., h[t_0..t_{l-1}].
/// Equal nodes must be adjacent in `nodes`.
pub fn newton_coefficients<H: Derivatives + ?Sized>(h: &H, nodes: &[Real]) -> Result<Vec<Real>> {
    let l = nodes.len();
    let mut c = Vec::with_capacity(l);
    for &t in nodes {
        c.push(h.derivative(t, 0)?);
    }
    let mut fact = 1.0;
    for j in 1..l {
        fact *= j as Real;
        for i in (j..l).rev() {
            c[i] = if nodes[i] == nodes[i - j] {
                h.derivative(nodes[i], j)? / fact
            } else {
                (c[i] - c[i - 1]) / (nodes[i] - nodes[i - j])
            };
        }
    }
    Ok(c)
}

/// Divided difference h[t_0, ..., t_{l-1}] over the listed nodes.
pub fn divided_difference<H: Derivatives + ?Sized>(h: &H, nodes: &[Real]) -> Result<Real> {
    if nodes.is_empty() {
        return Ok(0.0);
    }
    Ok(*newton_coefficients(h, nodes)?.last().unwrap())
}

/// Polynomial in Newton form c_0 + c_1 (t-x_0) + c_2 (t-x_0)(t-x_1) + ...
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonPoly {
    pub centers: Vec<Real>,
    pub coeffs: Vec<Real>,
}

impl NewtonPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: Real) -> Real {
        let m = self.coeffs.len();
        if m == 0 {
            return 0.0;
        }
        let mut p = self.coeffs[m - 1];
        for i in (0..m - 1).rev() {
            p = p * (t - self.centers[i]) + self.coeffs[i];
        }
        p
    }

    /// Value and the first `m` derivatives at t.
    pub fn eval_derivs(&self, t: Real, m: usize) -> Vec<Real> {
        let len = self.coeffs.len();
        let mut d = vec![0.0; m + 1];
        if len == 0 {
            return d;
        }
        d[0] = self.coeffs[len - 1];
        for i in (0..len - 1).rev() {
            let x = t - self.centers[i];
            for r in (1..=m).rev() {
                d[r] = d[r] * x + d[r - 1];
            }
            d[0] = d[0] * x + self.coeffs[i];
        }
        let mut f = 1.0;
        for (r, v) in d.iter_mut().enumerate().skip(1) {
            f *= r as Real;
            *v *= f;
        }
        d
    }

    pub fn to_poly(&self) -> Poly {
        let m = self.coeffs.len();
        if m == 0 {
            return Poly::zero();
        }
        let mut p = Poly::constant(self.coeffs[m - 1]);
        for i in (0..m - 1).rev() {
            p = &p.mul_linear(self.centers[i]) + &Poly::constant(self.coeffs[i]);
        }
        p
    }
}

/// Classical Hermite interpolant of h on T, degree at most |T| - 1.
pub fn hermite_interpolant<H: Derivatives + ?Sized>(h: &H, t: &Multiset) -> Result<NewtonPoly> {
    let centers = t.flatten();
    let coeffs = newton_coefficients(h, &centers)?;
    Ok(NewtonPoly { centers, coeffs })
}

/// g_0 = 1, g_j = g_{j-1} (t - t_j) for the flattened multiset.
pub fn partial_products(t: &Multiset) -> Vec<Poly> {
    let mut out = vec![Poly::constant(1.0)];
    for x in t.flatten() {
        let next = out.last().unwrap().mul_linear(x);
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Square;
    impl Derivatives for Square {
        fn derivative(&self, t: Real, m: usize) -> Result<Real> {
            Ok(match m {
                0 => t * t,
                1 => 2.0 * t,
                2 => 2.0,
                _ => 0.0,
            })
        }
    }

    struct Exp;
    impl Derivatives for Exp {
        fn derivative(&self, t: Real, _m: usize) -> Result<Real> {
            Ok(t.exp())
        }
    }

    #[test]
    fn roots_of_simple_quadratics() {
        let r = roots(&Poly::new(vec![-1.0, 0.0, 1.0]), 1e-7).unwrap();
        assert_eq!(r.complex_pairs, 0);
        assert!((r.real[0] + 1.0).abs() < 1e-14 && (r.real[1] - 1.0).abs() < 1e-14);
        let r = roots(&Poly::new(vec![1.0, 0.0, 1.0]), 1e-7).unwrap();
        assert!(r.real.is_empty());
        assert_eq!(r.complex_pairs, 1);
        assert_eq!(roots(&Poly::constant(3.0), 1e-7), Err(Error::ConstantPolynomial));
    }

    #[test]
    fn double_root_is_not_simple() {
        let p = Poly::from_roots(&[0.3, 0.3, -0.5]);
        let r = roots(&p, 1e-7).unwrap();
        assert!(!r.all_real_simple());
    }

    #[test]
    fn divided_differences_trivial() {
        assert!((divided_difference(&Square, &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((divided_difference(&Exp, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let cubic = Poly::new(vec![0.0, 0.0, 0.0, 1.0]);
        let j = hermite_interpolant(&cubic, &Multiset::doubled(&[0.0, 1.0])).unwrap();
        let p = j.to_poly();
        for (a, b) in p.coeffs().iter().zip(cubic.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn hermite_single_node_is_constant() {
        let j = hermite_interpolant(&Exp, &Multiset::new(&[(0.4, 1)])).unwrap();
        assert_eq!(j.degree(), 0);
        assert!((j.eval(-0.9) - 0.4f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn partial_products_are_monic_and_nested() {
        let t = Multiset::doubled(&[-0.5, 0.2]);
        let g = partial_products(&t);
        assert_eq!(g.len(), 5);
        assert!(g.iter().all(|p| (p.leading() - 1.0).abs() < 1e-15));
        let q1 = Poly::linear_root(-0.5);
        let q2 = q1.mul_linear(0.2);
        assert_eq!(g[2], &q1 * &q1);
        assert!((&g[3] - &(&q1 * &q2)).norm_inf() < 1e-15);
        assert!((&g[4] - &(&q2 * &q2)).norm_inf() < 1e-15);
    }

    #[test]
    fn newton_derivatives_match_monomial() {
        let t = Multiset::new(&[(-0.7, 2), (0.1, 1), (0.6, 3)]);
        let j = hermite_interpolant(&Exp, &t).unwrap();
        let p = j.to_poly();
        for &x in &[-0.3, 0.25, 0.8] {
            let d = j.eval_derivs(x, 3);
            for (m, v) in d.iter().enumerate() {
                assert!((v - p.eval_deriv(x, m)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn synthetic_division() {
        let p = Poly::from_roots(&[0.5, -0.25, 0.75]);
        let (q, r) = p.div_linear(0.5);
        assert!(r.abs() < 1e-15);
        assert!((&q - &Poly::from_roots(&[-0.25, 0.75])).norm_inf() < 1e-15);
    }
}
