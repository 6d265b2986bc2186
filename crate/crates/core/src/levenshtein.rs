//! First level: DGS bound, tau(n,N), Levenshtein bound L_tau(n,s), the
//! Levenshtein 1/N-quadrature, first-level ULB and test functions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::orthobasis::{basis, gegenbauer};
use crate::potentials::Potential;
use crate::scalarpoly::{chebyshev_grid, hermite_interpolant, prod_eval, roots, Multiset, Poly};
use crate::{Error, Real, Result};

/// Default upper index for test-function scans.
pub const DEFAULT_TESTFN_CAP: usize = 200;

/// (k, eps) with tau = 2k - 1 + eps.
pub fn k_eps(tau: usize) -> (usize, usize) {
    let k = tau.div_ceil(2);
    (k, tau + 1 - 2 * k)
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// D(n,tau) = C(n+k-2+eps, n-1) + C(n+k-2, n-1).
pub fn dgs_bound(n: usize, tau: usize) -> u128 {
    let (k, e) = k_eps(tau);
    binomial(n + k - 2 + e, n - 1) + binomial(n + k - 2, n - 1)
}

/// D(n,tau) = p^{1-eps} sum_{i<=k-1+eps} r_i with p = 1 - (-1)^k P_{k-1}^{1,0}(-1).
pub fn dgs_bound_alt(n: usize, tau: usize) -> Real {
    let (k, e) = k_eps(tau);
    let mu = gegenbauer(n);
    let sum: Real = (0..k + e).map(|i| mu.r(i)).sum();
    if e == 1 {
        return sum;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    (1.0 - sign * basis(n, 1, 0).eval(k - 1, -1.0)) * sum
}

/// I_tau = [t_{k-1+eps}^{1,1-eps}, t_k^{1,eps}], with t_0^{1,1} = -1.
pub fn interval(n: usize, tau: usize) -> (Real, Real) {
    let (k, e) = k_eps(tau);
    let lo = basis(n, 1, (1 - e) as u8).largest_zero(k - 1 + e).unwrap_or(-1.0);
    let hi = basis(n, 1, e as u8).largest_zero(k).unwrap();
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevParams {
    pub n: usize,
    pub card: Real,
    pub tau: usize,
    pub k: usize,
    pub eps: usize,
    pub interval: (Real, Real),
}

/// tau with N in [D(n,tau), D(n,tau+1)).
pub fn tau_of(n: usize, card: Real) -> Result<LevParams> {
    if !(card >= 2.0) {
        return Err(Error::Cardinality(card));
    }
    let mut tau = 1;
    while (dgs_bound(n, tau + 1) as Real) <= card {
        tau += 1;
    }
    let (k, eps) = k_eps(tau);
    Ok(LevParams {
        n,
        card,
        tau,
        k,
        eps,
        interval: interval(n, tau),
    })
}

/// L_tau(n,s) = (1 - P_{k-1+eps}^{1,0}(s) / P_k^{0,eps}(s)) sum_{i<=k-1+eps} r_i.
pub fn lev_bound_tau(n: usize, tau: usize, s: Real) -> Real {
    let (k, e) = k_eps(tau);
    let sum: Real = (0..k + e).map(|i| gegenbauer(n).r(i)).sum();
    let num = basis(n, 1, 0).eval(k - 1 + e, s);
    let den = basis(n, 0, e as u8).eval(k, s);
    (1.0 - num / den) * sum
}

/// L(n,s) with tau chosen so that s lies in I_tau.
pub fn lev_bound(n: usize, s: Real) -> Result<(Real, usize)> {
    if !(-1.0..1.0).contains(&s) {
        return Err(Error::Separation(s));
    }
    let mut tau = 1;
    while interval(n, tau).1 < s {
        tau += 1;
    }
    Ok((lev_bound_tau(n, tau, s), tau))
}

/// alpha_{k+eps}: the s in I_tau with L_tau(n,s) = N.
pub fn solve_s(n: usize, card: Real) -> Result<Real> {
    let p = tau_of(n, card)?;
    Ok(solve_s_tau(n, p.tau, card))
}

fn solve_s_tau(n: usize, tau: usize, card: Real) -> Real {
    let (mut lo, mut hi) = interval(n, tau);
    let f = |s: Real| lev_bound_tau(n, tau, s) - card;
    if f(lo) >= -1e-12 * card {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(hi).abs() < f(lo).abs() {
        hi
    } else {
        lo
    }
}

/// Admitted Gegenbauer indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceSpec {
    pub indices: BTreeSet<usize>,
}

impl SubspaceSpec {
    /// P_tau = span{P_0..P_tau}.
    pub fn upto(tau: usize) -> Self {
        SubspaceSpec {
            indices: (0..=tau).collect(),
        }
    }

    /// `upto(max)` without the listed indices.
    pub fn upto_without(max: usize, skip: &[usize]) -> Self {
        SubspaceSpec {
            indices: (0..=max).filter(|i| !skip.contains(i)).collect(),
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn max_index(&self) -> usize {
        self.indices.iter().next_back().copied().unwrap_or(0)
    }

    /// Largest |coefficient| outside the set, relative to the largest coefficient.
    pub fn membership_defect(&self, n: usize, degree: usize, f: impl Fn(Real) -> Real) -> Real {
        let c = gegenbauer(n).coefficients_fn(degree, degree, f);
        let scale = c.iter().fold(0.0, |m: Real, x| m.max(x.abs())).max(Real::MIN_POSITIVE);
        c.iter()
            .enumerate()
            .filter(|(i, _)| !self.contains(*i))
            .fold(0.0, |m: Real, (_, x)| m.max(x.abs()))
            / scale
    }
}

/// Nodes/weights with f_0 = f(1)/N + sum w_i f(x_i) on the subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub n: usize,
    pub card: Real,
    pub nodes: Vec<Real>,
    pub weights: Vec<Real>,
    pub subspace: SubspaceSpec,
    pub level: u8,
}

impl QuadratureRule {
    /// f(1)/N + sum w_i f(x_i).
    pub fn apply(&self, f: impl Fn(Real) -> Real) -> Real {
        f(1.0) / self.card
            + self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f(x))
                .sum::<Real>()
    }

    /// Q_j = 1/N + sum w_i P_j(x_i).
    pub fn test_function(&self, j: usize) -> Real {
        let mu = gegenbauer(self.n);
        self.apply(|t| if t == 1.0 { 1.0 } else { mu.eval(j, t) })
    }

    /// Q_j for every j in `js`.
    pub fn test_functions(&self, js: impl IntoIterator<Item = usize>) -> Vec<(usize, Real)> {
        let js: Vec<usize> = js.into_iter().collect();
        let jmax = js.iter().copied().max().unwrap_or(0);
        let mu = gegenbauer(self.n);
        let vals: Vec<Vec<Real>> = self.nodes.iter().map(|&x| mu.eval_upto(jmax, x)).collect();
        js.into_iter()
            .map(|j| {
                let q = 1.0 / self.card
                    + self
                        .weights
                        .iter()
                        .zip(&vals)
                        .map(|(w, v)| w * v[j])
                        .sum::<Real>();
                (j, q)
            })
            .collect()
    }

    /// Max over admitted basis elements of |f_0 - f(1)/N - sum w f(x)|.
    pub fn exactness_residual(&self) -> Real {
        // for P_j, j >= 1, the residual is Q_j itself; for P_0 it is 1 - Q_0
        self.test_functions(self.subspace.indices.iter().copied())
            .into_iter()
            .map(|(j, q)| if j == 0 { (1.0 - q).abs() } else { q.abs() })
            .fold(0.0, Real::max)
    }

    /// Residual of the rule on an arbitrary polynomial given pointwise.
    pub fn residual_fn(&self, degree: usize, f: impl Fn(Real) -> Real + Copy) -> Real {
        let f0 = gegenbauer(self.n).integrate(degree, f);
        (f0 - self.apply(f)).abs()
    }

    /// N^2 sum w_i h(x_i).
    pub fn energy(&self, h: &Potential) -> Result<Real> {
        let mut s = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            s += w * h.value(x)?;
        }
        Ok(self.card * self.card * s)
    }
}

/// Weights w_i = int l_i d mu / l_i(x_i), l_i = (t-1) prod_{j != i}(t - x_j).
pub fn lagrange_weights(n: usize, nodes: &[Real]) -> Vec<Real> {
    let mu = gegenbauer(n);
    (0..nodes.len())
        .map(|i| {
            let others: Vec<Real> = nodes
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &x)| x)
                .collect();
            let l = |t: Real| (t - 1.0) * prod_eval(&others, t);
            mu.integrate(nodes.len(), l) / l(nodes[i])
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstLevel {
    pub params: LevParams,
    /// alpha_{k+eps}
    pub s: Real,
    pub rule: QuadratureRule,
}

impl FirstLevel {
    /// Interpolation multiset: every node doubled, except -1 (simple) when eps = 1.
    pub fn multiset(&self) -> Multiset {
        let e = self.params.eps;
        let pairs: Vec<(Real, usize)> = self
            .rule
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, if e == 1 && i == 0 { 1 } else { 2 }))
            .collect();
        Multiset::new(&pairs)
    }
}

/// P_k^{1,eps}(t) P_{k-1}^{1,eps}(s) - P_{k-1}^{1,eps}(t) P_k^{1,eps}(s).
fn bracket(n: usize, k: usize, e: usize, s: Real) -> Poly {
    let b = basis(n, 1, e as u8);
    &b.poly(k).scale(b.eval(k - 1, s)) - &b.poly(k - 1).scale(b.eval(k, s))
}

/// The Levenshtein 1/N-quadrature rule, exact on P_tau.
pub fn first_level_quadrature(n: usize, card: Real) -> Result<FirstLevel> {
    let params = tau_of(n, card)?;
    let (k, e) = (params.k, params.eps);
    let s = solve_s_tau(n, params.tau, card);
    let br = bracket(n, k, e, s);
    let rt = roots(&br, 1e-9)?;
    if rt.complex_pairs > 0 || rt.real.len() != k {
        return Err(Error::Roots(format!("first-level node equation at (n,N)=({n},{card})")));
    }
    let mut nodes = Vec::with_capacity(k + e);
    if e == 1 {
        nodes.push(-1.0);
    }
    nodes.extend(rt.real.iter().copied());
    // s is a root of the bracket; snap to the solved value
    *nodes.last_mut().unwrap() = s;
    // at N = D(n,tau), tau odd, the smallest node sits at -1
    if e == 0 && (nodes[0] + 1.0).abs() < 1e-9 {
        nodes[0] = -1.0;
    }
    let weights = lagrange_weights(n, &nodes);
    Ok(FirstLevel {
        params: params.clone(),
        s,
        rule: QuadratureRule {
            n,
            card,
            nodes,
            weights,
            subspace: SubspaceSpec::upto(params.tau),
            level: 1,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    /// Signed slack: >= 0 when the condition holds.
    pub margin: Real,
    pub mandatory: bool,
}

impl Check {
    pub fn at_least(value: Real, bound: Real, mandatory: bool) -> Self {
        Check {
            pass: value >= bound,
            margin: value - bound,
            mandatory,
        }
    }

    pub fn at_most(value: Real, bound: Real, mandatory: bool) -> Self {
        Check {
            pass: value <= bound,
            margin: bound - value,
            mandatory,
        }
    }

    pub fn flag(pass: bool, mandatory: bool) -> Self {
        Check {
            pass,
            margin: if pass { 0.0 } else { -1.0 },
            mandatory,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFnSummary {
    pub min: Real,
    pub argmin: usize,
    pub cap: usize,
    pub negative: Vec<usize>,
}

impl TestFnSummary {
    pub fn from_values(values: &[(usize, Real)], cap: usize) -> Self {
        let (argmin, min) = values
            .iter()
            .copied()
            .fold((0, Real::INFINITY), |acc, (j, q)| if q < acc.1 { (j, q) } else { acc });
        TestFnSummary {
            min,
            argmin,
            cap,
            negative: values.iter().filter(|v| v.1 < -1e-10).map(|v| v.0).collect(),
        }
    }

    pub fn nonnegative(&self) -> bool {
        self.negative.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub level: u8,
    pub n: usize,
    pub card: Real,
    pub tau: usize,
    pub eps: usize,
    pub potential: String,
    pub value: Real,
    pub nodes: Vec<Real>,
    pub weights: Vec<Real>,
    /// Optimal polynomial, monomial coefficients.
    pub poly: Vec<Real>,
    pub gegenbauer: Vec<Real>,
    pub checks: BTreeMap<String, Check>,
    pub testfns: Option<TestFnSummary>,
}

impl BoundCertificate {
    pub fn valid(&self) -> bool {
        self.checks.values().all(|c| c.pass || !c.mandatory)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, c)| c.mandatory && !c.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// min over a grid of (h - f), scaled by max(1, |h|).
pub(crate) fn grid_margin(
    h: &Potential,
    f: impl Fn(Real) -> Real,
    a: Real,
    b: Real,
    points: usize,
) -> Result<Real> {
    let mut worst = Real::INFINITY;
    for t in chebyshev_grid(a, b, points) {
        let hv = h.value(t)?;
        worst = worst.min((hv - f(t)) / hv.abs().max(1.0));
    }
    Ok(worst)
}

/// Smallest Gegenbauer coefficient with index >= 1, relative to the largest.
pub(crate) fn min_coefficient_rel(coeffs: &[Real]) -> Real {
    let scale = coeffs.iter().fold(0.0, |m: Real, x| m.max(x.abs())).max(Real::MIN_POSITIVE);
    coeffs.iter().skip(1).copied().fold(Real::INFINITY, Real::min) / scale
}

/// First-level ULB R_tau(n,N;h) = N^2 sum rho_i h(alpha_i) with its certificate.
pub fn ulb_first(n: usize, card: Real, h: &Potential) -> Result<(Real, BoundCertificate)> {
    ulb_first_capped(n, card, h, DEFAULT_TESTFN_CAP)
}

pub fn ulb_first_capped(
    n: usize,
    card: Real,
    h: &Potential,
    cap: usize,
) -> Result<(Real, BoundCertificate)> {
    let fl = first_level_quadrature(n, card)?;
    let tau = fl.params.tau;
    let value = fl.rule.energy(h)?;
    let f = hermite_interpolant(h, &fl.multiset())?;
    let coeffs = gegenbauer(n).coefficients_fn(tau, tau, |t| f.eval(t));
    let mut checks = BTreeMap::new();
    checks.insert(
        "quadrature_exact".into(),
        Check::at_most(fl.rule.exactness_residual(), 1e-10, true),
    );
    checks.insert(
        "weights_positive".into(),
        Check::at_least(fl.rule.weights.iter().copied().fold(Real::INFINITY, Real::min), 0.0, true),
    );
    checks.insert(
        "f_le_h".into(),
        Check::at_least(grid_margin(h, |t| f.eval(t), -1.0, 1.0 - 1e-6, 2001)?, -1e-9, true),
    );
    checks.insert(
        "positive_definite".into(),
        Check::at_least(min_coefficient_rel(&coeffs), -1e-10, true),
    );
    let via_poly = card * card * (coeffs[0] - f.eval(1.0) / card);
    checks.insert(
        "energy_identity".into(),
        Check::at_most((via_poly - value).abs() / value.abs().max(1.0), 1e-9, true),
    );
    let tf = TestFnSummary::from_values(&fl.rule.test_functions(tau + 1..=cap), cap);
    checks.insert("lp_optimal".into(), Check::flag(tf.nonnegative(), false));
    let cert = BoundCertificate {
        level: 1,
        n,
        card,
        tau,
        eps: fl.params.eps,
        potential: h.to_string(),
        value,
        nodes: fl.rule.nodes.clone(),
        weights: fl.rule.weights.clone(),
        poly: f.to_poly().coeffs().to_vec(),
        gegenbauer: coeffs,
        checks,
        testfns: Some(tf),
    };
    Ok((value, cert))
}

/// Q_j for j in the range, from any rule.
pub fn test_functions(
    rule: &QuadratureRule,
    js: impl IntoIterator<Item = usize>,
) -> Vec<(usize, Real)> {
    rule.test_functions(js)
}

/// g(1)/g_0 after verifying g in B_{n,s}: g <= 0 on [-1,s], g_i >= 0 (i >= 1), g_0 > 0.
pub fn bound_cardinality_via_fn(
    n: usize,
    s: Real,
    degree: usize,
    g: impl Fn(Real) -> Real,
) -> Result<Real> {
    let coeffs = gegenbauer(n).coefficients_fn(degree, degree, &g);
    let scale = coeffs.iter().fold(0.0, |m: Real, x| m.max(x.abs()));
    if !(coeffs[0] > 0.0) {
        return Err(Error::Inadmissible(format!("g_0 = {} is not positive", coeffs[0])));
    }
    for (i, &c) in coeffs.iter().enumerate().skip(1) {
        if c < -1e-10 * scale {
            return Err(Error::Inadmissible(format!("Gegenbauer coefficient g_{i} = {c:e} < 0")));
        }
    }
    let gscale = chebyshev_grid(-1.0, 1.0, 201)
        .into_iter()
        .fold(0.0, |m: Real, t| m.max(g(t).abs()))
        .max(1.0);
    for t in chebyshev_grid(-1.0, s, 2001) {
        let v = g(t);
        if v > 1e-9 * gscale {
            return Err(Error::Inadmissible(format!("g({t}) = {v:e} > 0 on [-1, s]")));
        }
    }
    Ok(g(1.0) / coeffs[0])
}

pub fn bound_cardinality_via_poly(n: usize, s: Real, g: &Poly) -> Result<Real> {
    bound_cardinality_via_fn(n, s, g.degree(), |t| g.eval(t))
}

/// Levenshtein's LP polynomial (t+1)^eps [P_k P_{k-1}(s) - P_{k-1} P_k(s)]^2 / (t - s), degree tau.
pub fn levenshtein_poly(n: usize, tau: usize, s: Real) -> Poly {
    let (k, e) = k_eps(tau);
    let br = bracket(n, k, e, s);
    let (q, _) = (&br * &br).div_linear(s);
    if e == 1 {
        &q * &Poly::new(vec![1.0, 1.0])
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_eps_parities() {
        assert_eq!(k_eps(5), (3, 0));
        assert_eq!(k_eps(6), (3, 1));
        assert_eq!(k_eps(1), (1, 0));
        assert_eq!(k_eps(2), (1, 1));
    }

    #[test]
    fn dgs_values() {
        assert_eq!(dgs_bound(8, 5), 72);
        assert_eq!(dgs_bound(8, 6), 156);
        assert_eq!(dgs_bound(3, 5), 12);
        assert_eq!(dgs_bound(9, 8), 660);
    }

    #[test]
    fn dgs_alt_form_agrees() {
        for n in [3, 4, 5, 8] {
            for tau in 1..=10 {
                let alt = dgs_bound_alt(n, tau);
                assert!((alt - dgs_bound(n, tau) as Real).abs() < 1e-8 * alt, "n={n} tau={tau}");
            }
        }
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau_of(4, 24.0).unwrap().tau, 5);
        assert_eq!(tau_of(4, 120.0).unwrap().tau, 11);
        assert_eq!(tau_of(8, 100.0).unwrap().tau, 5);
        assert_eq!(tau_of(3, 12.0).unwrap().tau, 5);
        assert!(tau_of(3, 1.5).is_err());
    }

    #[test]
    fn lev_first_tau() {
        // L_1(n,s) = (s-1)/s
        let (l, tau) = lev_bound(5, -0.5).unwrap();
        assert_eq!(tau, 1);
        assert!((l - 3.0).abs() < 1e-13);
    }

    #[test]
    fn levenshtein_poly_bound_equals_card() {
        let fl = first_level_quadrature(4, 24.0).unwrap();
        let g = levenshtein_poly(4, 5, fl.s);
        let b = bound_cardinality_via_poly(4, fl.s, &g).unwrap();
        assert!((b - 24.0).abs() < 1e-9);
        assert!(bound_cardinality_via_poly(4, 0.3, &Poly::constant(1.0)).is_err());
    }
}
