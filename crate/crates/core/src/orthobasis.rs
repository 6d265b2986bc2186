//! Gegenbauer polynomials P_i^{(n)} and adjacent Jacobi polynomials P_i^{a,b},
//! normalized by P(1) = 1, with their probability measures
//! d nu^{a,b} = c^{a,b} (1-t)^a (1+t)^b d mu and Gauss rules.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::scalarpoly::Poly;
use crate::Real;

/// Recurrence data is tabulated up to this degree.
pub const MAX_DEGREE: usize = 600;

#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<Real>,
    pub weights: Vec<Real>,
}

impl GaussRule {
    pub fn integrate<F: Fn(Real) -> Real>(&self, f: F) -> Real {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisConstants {
    pub r: Real,
    pub leading: Real,
    pub largest_zero: Option<Real>,
}

#[derive(Debug)]
pub struct OrthoBasis {
    n: usize,
    a: u8,
    b: u8,
    // monic recurrence p_{k+1} = (t - ra_k) p_k - rb_k p_{k-1}
    ra: Vec<Real>,
    rb: Vec<Real>,
    // v_k = p_k(1) / p_{k-1}(1)
    v: Vec<Real>,
    norm2: Vec<Real>,
    lead: Vec<Real>,
    rules: Mutex<HashMap<usize, Arc<GaussRule>>>,
    zeros: Mutex<HashMap<usize, Real>>,
}

/// Shared, lazily built basis for (n, a, b).
pub fn basis(n: usize, a: u8, b: u8) -> Arc<OrthoBasis> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u8, u8), Arc<OrthoBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((n, a, b))
        .or_insert_with(|| Arc::new(OrthoBasis::new(n, a, b)))
        .clone()
}

/// Gegenbauer basis P_i^{(n)} with measure d mu.
pub fn gegenbauer(n: usize) -> Arc<OrthoBasis> {
    basis(n, 0, 0)
}

impl OrthoBasis {
    pub fn new(n: usize, a: u8, b: u8) -> Self {
        assert!(n >= 2, "dimension must be at least 2");
        assert!(a <= 1 && b <= 1, "adjacent parameters are 0 or 1");
        let al = a as Real + (n as Real - 3.0) / 2.0;
        let be = b as Real + (n as Real - 3.0) / 2.0;
        let s = al + be;
        let mut ra = vec![0.0; MAX_DEGREE + 1];
        let mut rb = vec![0.0; MAX_DEGREE + 1];
        ra[0] = (be - al) / (s + 2.0);
        for k in 1..=MAX_DEGREE {
            let kk = k as Real;
            if al != be {
                ra[k] = (be * be - al * al) / ((2.0 * kk + s) * (2.0 * kk + s + 2.0));
            }
            rb[k] = if k == 1 {
                4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + s).powi(2) * (3.0 + s))
            } else {
                4.0 * kk * (kk + al) * (kk + be) * (kk + s)
                    / ((2.0 * kk + s).powi(2) * (2.0 * kk + s + 1.0) * (2.0 * kk + s - 1.0))
            };
        }
        let mut v = vec![1.0; MAX_DEGREE + 1];
        let mut norm2 = vec![1.0; MAX_DEGREE + 1];
        let mut lead = vec![1.0; MAX_DEGREE + 1];
        for k in 1..=MAX_DEGREE {
            v[k] = if k == 1 {
                1.0 - ra[0]
            } else {
                (1.0 - ra[k - 1]) - rb[k - 1] / v[k - 1]
            };
            norm2[k] = norm2[k - 1] * rb[k] / (v[k] * v[k]);
            lead[k] = lead[k - 1] / v[k];
        }
        OrthoBasis {
            n,
            a,
            b,
            ra,
            rb,
            v,
            norm2,
            lead,
            rules: Mutex::new(HashMap::new()),
            zeros: Mutex::new(HashMap::new()),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> (u8, u8) {
        (self.a, self.b)
    }

    /// P_i(t) by the normalized three-term recurrence.
    pub fn eval(&self, i: usize, t: Real) -> Real {
        let mut prev = 0.0;
        let mut cur = 1.0;
        for k in 0..i {
            let next = ((t - self.ra[k]) * cur - if k > 0 { self.rb[k] / self.v[k] * prev } else { 0.0 })
                / self.v[k + 1];
            prev = cur;
            cur = next;
        }
        cur
    }

    /// P_0(t), ..., P_imax(t).
    pub fn eval_upto(&self, imax: usize, t: Real) -> Vec<Real> {
        let mut out = Vec::with_capacity(imax + 1);
        out.push(1.0);
        for k in 0..imax {
            let prev = if k > 0 { out[k - 1] } else { 0.0 };
            let next = ((t - self.ra[k]) * out[k] - if k > 0 { self.rb[k] / self.v[k] * prev } else { 0.0 })
                / self.v[k + 1];
            out.push(next);
        }
        out
    }

    /// (P_i(t), P_i'(t)).
    pub fn eval_with_deriv(&self, i: usize, t: Real) -> (Real, Real) {
        let (mut p0, mut p1) = (0.0, 1.0);
        let (mut d0, mut d1) = (0.0, 0.0);
        for k in 0..i {
            let c = if k > 0 { self.rb[k] / self.v[k] } else { 0.0 };
            let p2 = ((t - self.ra[k]) * p1 - c * p0) / self.v[k + 1];
            let d2 = (p1 + (t - self.ra[k]) * d1 - c * d0) / self.v[k + 1];
            p0 = p1;
            p1 = p2;
            d0 = d1;
            d1 = d2;
        }
        (p1, d1)
    }

    /// P_i as a monomial-basis polynomial.
    pub fn poly(&self, i: usize) -> Poly {
        let mut prev = Poly::zero();
        let mut cur = Poly::constant(1.0);
        for k in 0..i {
            let c = if k > 0 { self.rb[k] / self.v[k] } else { 0.0 };
            let next = (&cur.mul_linear(self.ra[k]) - &prev.scale(c)).scale(1.0 / self.v[k + 1]);
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Squared norm of P_i in the probability measure nu^{a,b}.
    pub fn norm2(&self, i: usize) -> Real {
        self.norm2[i]
    }

    /// r_i^{a,b} = 1 / ||P_i||^2.
    pub fn r(&self, i: usize) -> Real {
        1.0 / self.norm2[i]
    }

    pub fn leading(&self, i: usize) -> Real {
        self.lead[i]
    }

    /// Largest zero t_i^{a,b}; `None` for i = 0.
    pub fn largest_zero(&self, i: usize) -> Option<Real> {
        if i == 0 {
            return None;
        }
        if let Some(z) = self.zeros.lock().unwrap().get(&i) {
            return Some(*z);
        }
        let (x, _) = self.jacobi_eigen(i);
        let z = self.polish(i, x[i - 1]);
        self.zeros.lock().unwrap().insert(i, z);
        Some(z)
    }

    pub fn constants(&self, i: usize) -> BasisConstants {
        BasisConstants {
            r: self.r(i),
            leading: self.leading(i),
            largest_zero: self.largest_zero(i),
        }
    }

    /// Sorted eigenvalues and first eigenvector components of the m x m Jacobi matrix.
    fn jacobi_eigen(&self, m: usize) -> (Vec<Real>, Vec<Real>) {
        let mut j = DMatrix::<Real>::zeros(m, m);
        for k in 0..m {
            j[(k, k)] = self.ra[k];
            if k + 1 < m {
                let off = self.rb[k + 1].sqrt();
                j[(k, k + 1)] = off;
                j[(k + 1, k)] = off;
            }
        }
        let eig = SymmetricEigen::new(j);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
        let x = idx.iter().map(|&p| eig.eigenvalues[p]).collect();
        let w = idx.iter().map(|&p| eig.eigenvectors[(0, p)].powi(2)).collect();
        (x, w)
    }

    fn polish(&self, i: usize, mut x: Real) -> Real {
        for _ in 0..4 {
            let (p, d) = self.eval_with_deriv(i, x);
            if d == 0.0 {
                break;
            }
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x
    }

    /// m-point Gauss rule for nu^{a,b}: exact through degree 2m-1, weights sum to 1.
    pub fn gauss_rule(&self, m: usize) -> Arc<GaussRule> {
        let m = m.max(1);
        if let Some(r) = self.rules.lock().unwrap().get(&m) {
            return r.clone();
        }
        let (x, _) = self.jacobi_eigen(m);
        let nodes: Vec<Real> = x.iter().map(|&t| self.polish(m, t)).collect();
        // Christoffel numbers from the polished nodes
        let weights: Vec<Real> = nodes
            .iter()
            .map(|&t| {
                let p = self.eval_upto(m - 1, t);
                1.0 / p.iter().enumerate().map(|(j, v)| v * v * self.r(j)).sum::<Real>()
            })
            .collect();
        let rule = Arc::new(GaussRule { nodes, weights });
        self.rules.lock().unwrap().insert(m, rule.clone());
        rule
    }

    /// Integral of f against nu^{a,b}; exact when f is a polynomial of degree <= `degree`.
    pub fn integrate<F: Fn(Real) -> Real>(&self, degree: usize, f: F) -> Real {
        self.gauss_rule(degree / 2 + 1).integrate(f)
    }

    /// <f, g>_{a,b}
    pub fn inner(&self, f: &Poly, g: &Poly) -> Real {
        self.integrate(f.degree() + g.degree(), |t| f.eval(t) * g.eval(t))
    }

    /// Expansion coefficients f_0..f_upto of a function that is a polynomial of
    /// degree <= `degree`, evaluated pointwise.
    pub fn coefficients_fn<F: Fn(Real) -> Real>(&self, upto: usize, degree: usize, f: F) -> Vec<Real> {
        let rule = self.gauss_rule((degree + upto) / 2 + 1);
        let mut acc = vec![0.0; upto + 1];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let fx = w * f(x);
            for (i, p) in self.eval_upto(upto, x).into_iter().enumerate() {
                acc[i] += fx * p;
            }
        }
        for (i, c) in acc.iter_mut().enumerate() {
            *c *= self.r(i);
        }
        acc
    }

    pub fn expand(self: &Arc<Self>, f: &Poly) -> GegExpansion {
        let d = f.degree();
        GegExpansion {
            basis: self.clone(),
            coeffs: self.coefficients_fn(d, d, |t| f.eval(t)),
        }
    }

    /// c^{a,b} = 1 / int (1-t)^a (1+t)^b d mu.
    pub fn measure_constant(&self) -> Real {
        let mu = gegenbauer(self.n);
        let (a, b) = (self.a as i32, self.b as i32);
        1.0 / mu.integrate(2, |t| (1.0 - t).powi(a) * (1.0 + t).powi(b))
    }
}

/// gamma_n with d mu(t) = gamma_n (1-t^2)^{(n-3)/2} dt.
pub fn gamma_n(n: usize) -> Real {
    let mut g = if n % 2 == 0 { std::f64::consts::FRAC_1_PI } else { 0.5 };
    let mut m = if n % 2 == 0 { 2 } else { 3 };
    while m < n {
        g *= m as Real / (m as Real - 1.0);
        m += 2;
    }
    g
}

/// Closed form r_i = (2i+n-2)/(i+n-2) * C(i+n-2, i).
pub fn r_closed_form(n: usize, i: usize) -> Real {
    if i == 0 {
        return 1.0;
    }
    let mut binom = 1.0;
    for j in 1..=i {
        binom *= (n - 2 + j) as Real / j as Real;
    }
    (2 * i + n - 2) as Real / (i + n - 2) as Real * binom
}

/// I_j = int P_j^{1,0} d mu, by quadrature and by (sum_{i<=j} r_i)^{-1}.
pub fn i_j(n: usize, j: usize) -> (Real, Real) {
    let adj = basis(n, 1, 0);
    let quad = gegenbauer(n).integrate(j, |t| adj.eval(j, t));
    let sum: Real = (0..=j).map(|i| gegenbauer(n).r(i)).sum();
    (quad, 1.0 / sum)
}

#[derive(Clone, Debug)]
pub struct GegExpansion {
    pub basis: Arc<OrthoBasis>,
    pub coeffs: Vec<Real>,
}

impl GegExpansion {
    pub fn eval(&self, t: Real) -> Real {
        let p = self.basis.eval_upto(self.coeffs.len().saturating_sub(1), t);
        p.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn to_poly(&self) -> Poly {
        self.coeffs
            .iter()
            .enumerate()
            .fold(Poly::zero(), |acc, (i, &c)| &acc + &self.basis.poly(i).scale(c))
    }

    /// Smallest coefficient with index >= `from`.
    pub fn min_coefficient(&self, from: usize) -> Real {
        self.coeffs.iter().skip(from).copied().fold(Real::INFINITY, Real::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_at_one() {
        for &(n, a, b) in &[(3, 0, 0), (4, 1, 0), (5, 1, 1), (8, 0, 1)] {
            let bs = basis(n, a, b);
            for i in 0..40 {
                assert!((bs.eval(i, 1.0) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn p2_dimension_four() {
        assert!((gegenbauer(4).eval(2, 0.0) + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn r_matches_closed_form() {
        for n in [3, 4, 5, 8, 9] {
            for i in 0..12 {
                let r = gegenbauer(n).r(i);
                assert!((r / r_closed_form(n, i) - 1.0).abs() < 1e-12, "n={n} i={i}");
            }
        }
        assert_eq!(r_closed_form(4, 3), 16.0);
    }

    #[test]
    fn conventions_and_constants() {
        let c = gegenbauer(6).constants(0);
        assert_eq!((c.r, c.leading, c.largest_zero), (1.0, 1.0, None));
        assert!((basis(4, 1, 0).measure_constant() - 1.0).abs() < 1e-14);
        assert!((basis(4, 1, 1).measure_constant() - 4.0 / 3.0).abs() < 1e-14);
        assert!((gamma_n(4) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((gamma_n(3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn leading_coefficient_matches_poly() {
        let bs = basis(5, 1, 0);
        for i in 0..10 {
            let p = bs.poly(i);
            assert!((p.leading() / bs.leading(i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_rule_basic() {
        let mu = gegenbauer(4);
        for m in 1..6 {
            let rule = mu.gauss_rule(m);
            assert!((rule.weights.iter().sum::<Real>() - 1.0).abs() < 1e-14);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!(rule.integrate(|t| t).abs() < 1e-15);
        }
    }

    #[test]
    fn i_j_agrees() {
        let (q, s) = i_j(4, 1);
        assert!((q - 0.2).abs() < 1e-15 && (s - 0.2).abs() < 1e-15);
        for n in [3, 4, 9] {
            let mut last = 2.0;
            for j in 0..15 {
                let (q, s) = i_j(n, j);
                assert!((q / s - 1.0).abs() < 1e-11);
                assert!(s < last);
                last = s;
            }
        }
    }
}
