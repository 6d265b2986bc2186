//! Second level: the skip-two/add-two subspace Lambda_{n,k}, its 1/N-quadrature
//! (nodes from a small nonlinear system), the constrained Hermite interpolant,
//! certification and the Table 3/4 style classification.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::levenshtein::{
    bound_cardinality_via_fn, first_level_quadrature, grid_margin, lagrange_weights,
    lev_bound_tau, min_coefficient_rel, BoundCertificate, Check, FirstLevel, QuadratureRule,
    SubspaceSpec, TestFnSummary, DEFAULT_TESTFN_CAP,
};
use crate::orthobasis::{basis, gegenbauer, OrthoBasis};
use crate::potentials::Potential;
use crate::scalarpoly::{hermite_interpolant, prod_eval, roots, Multiset, NewtonPoly, Poly};
use crate::{Error, Real, Result};

/// Multistart grid side for the (c2, c3) search.
pub const DEFAULT_GRID: usize = 41;

/// Precomputed inner products for the lift system of (n, N).
#[derive(Clone, Debug)]
pub struct LiftSystem {
    pub first: FirstLevel,
    pub n: usize,
    pub card: Real,
    pub k: usize,
    pub eps: usize,
    /// Gegenbauer indices omitted from Lambda_{n,k}.
    pub skip: [usize; 2],
    fam: Arc<OrthoBasis>,
    /// m[s][a][b] = int W P_a P_b P_{skip[s]} d mu, family indices k+1, k, k-1, k-2
    m: [[[Real; 4]; 4]; 2],
    /// int W P_a^2 d mu
    nr: [Real; 4],
    /// int (1+t)^eps P_a d mu
    ii: [Real; 4],
}

/// (d2, d3) for (d0, d1) = (1, 0) and (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DMaps {
    pub d2_1: Real,
    pub d3_1: Real,
    pub d2_2: Real,
    pub d3_2: Real,
}

impl LiftSystem {
    pub fn new(n: usize, card: Real) -> Result<Self> {
        let first = first_level_quadrature(n, card)?;
        let (k, eps) = (first.params.k, first.params.eps);
        if k < 2 {
            return Err(Error::NoLift(format!("tau = {} too small for a lift", first.params.tau)));
        }
        let fam = basis(n, 1, eps as u8);
        let mu = gegenbauer(n);
        let skip = [2 * k + eps, 2 * k + 1 + eps];
        let idx = [k + 1, k, k - 1, k - 2];
        let w = |t: Real| if eps == 0 { 1.0 - t } else { 1.0 - t * t };
        let rule = mu.gauss_rule((1 + eps + 2 * (k + 1) + skip[1]) / 2 + 2);
        let mut m = [[[0.0; 4]; 4]; 2];
        let mut nr = [0.0; 4];
        let mut ii = [0.0; 4];
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let p: Vec<Real> = idx.iter().map(|&i| fam.eval(i, x)).collect();
            let g = [mu.eval(skip[0], x), mu.eval(skip[1], x)];
            let wx = wt * w(x);
            for a in 0..4 {
                nr[a] += wx * p[a] * p[a];
                ii[a] += wt * (1.0 + x).powi(eps as i32) * p[a];
                for b in 0..4 {
                    for s in 0..2 {
                        m[s][a][b] += wx * p[a] * p[b] * g[s];
                    }
                }
            }
        }
        Ok(LiftSystem {
            first,
            n,
            card,
            k,
            eps,
            skip,
            fam,
            m,
            nr,
            ii,
        })
    }

    pub fn tau(&self) -> usize {
        self.first.params.tau
    }

    /// Subspace Lambda_{n,k}: P_tau plus indices tau+3, tau+4.
    pub fn subspace(&self) -> SubspaceSpec {
        SubspaceSpec::upto_without(self.tau() + 4, &self.skip)
    }

    fn r_mat(&self, c: [Real; 3]) -> [[Real; 4]; 2] {
        let cc = [1.0, c[0], c[1], c[2]];
        let mut r = [[0.0; 4]; 2];
        for s in 0..2 {
            for a in 0..4 {
                r[s][a] = (0..4).map(|b| self.m[s][a][b] * cc[b]).sum();
            }
        }
        r
    }

    /// Orthogonality of L to both skipped indices solved for (d2, d3).
    pub fn d_maps(&self, c: [Real; 3]) -> Result<DMaps> {
        let r = self.r_mat(c);
        let det = r[0][2] * r[1][3] - r[0][3] * r[1][2];
        let scale = r.iter().flatten().fold(0.0, |m: Real, x| m.max(x.abs()));
        if det.abs() <= 1e-14 * scale * scale {
            return Err(Error::Singular("d-map system"));
        }
        let solve = |d0: Real, d1: Real| {
            let rhs = [-(r[0][0] * d0 + r[0][1] * d1), -(r[1][0] * d0 + r[1][1] * d1)];
            (
                (rhs[0] * r[1][3] - r[0][3] * rhs[1]) / det,
                (r[0][2] * rhs[1] - rhs[0] * r[1][2]) / det,
            )
        };
        let (d2_1, d3_1) = solve(1.0, 0.0);
        let (d2_2, d3_2) = solve(0.0, 1.0);
        Ok(DMaps {
            d2_1,
            d3_1,
            d2_2,
            d3_2,
        })
    }

    /// The three equations, the bilinear ones multiplied through by the Cramer determinant.
    pub fn residuals(&self, c: [Real; 3]) -> [Real; 3] {
        let r = self.r_mat(c);
        let det = r[0][2] * r[1][3] - r[0][3] * r[1][2];
        let nr = &self.nr;
        let mut out = [0.0; 3];
        for (slot, (d0, d1)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
            let rhs = [-(r[0][0] * d0 + r[0][1] * d1), -(r[1][0] * d0 + r[1][1] * d1)];
            let d2 = rhs[0] * r[1][3] - r[0][3] * rhs[1];
            let d3 = r[0][2] * rhs[1] - rhs[0] * r[1][2];
            out[slot] = (d0 * nr[0] + d1 * c[0] * nr[1]) * det + c[1] * d2 * nr[2] + c[2] * d3 * nr[3];
        }
        out[2] = self.linear_residual(c);
        out
    }

    fn pow_eps(&self) -> Real {
        if self.eps == 1 {
            2.0
        } else {
            1.0
        }
    }

    fn linear_residual(&self, c: [Real; 3]) -> Real {
        let ii = &self.ii;
        ii[0] + c[0] * ii[1] + c[1] * ii[2] + c[2] * ii[3]
            - self.pow_eps() * (1.0 + c[0] + c[1] + c[2]) / self.card
    }

    /// c1 from the linear equation.
    pub fn c1_of(&self, c2: Real, c3: Real) -> Real {
        let p = self.pow_eps() / self.card;
        let ii = &self.ii;
        (p * (1.0 + c2 + c3) - ii[0] - c2 * ii[2] - c3 * ii[3]) / (ii[1] - p)
    }

    fn reduced(&self, x: [Real; 2]) -> [Real; 2] {
        let r = self.residuals([self.c1_of(x[0], x[1]), x[0], x[1]]);
        [r[0], r[1]]
    }

    fn newton(&self, mut x: [Real; 2]) -> Option<[Real; 2]> {
        let mut f = self.reduced(x);
        for _ in 0..60 {
            let h = [1e-7 * x[0].abs().max(1.0), 1e-7 * x[1].abs().max(1.0)];
            let mut jac = [[0.0; 2]; 2];
            for v in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[v] += h[v];
                xm[v] -= h[v];
                let (fp, fm) = (self.reduced(xp), self.reduced(xm));
                for e in 0..2 {
                    jac[e][v] = (fp[e] - fm[e]) / (2.0 * h[v]);
                }
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let mut dx = [
                (f[0] * jac[1][1] - jac[0][1] * f[1]) / det,
                (jac[0][0] * f[1] - f[0] * jac[1][0]) / det,
            ];
            let len = dx[0].hypot(dx[1]);
            if len > 1.0 {
                dx = [dx[0] / len, dx[1] / len];
            }
            x = [x[0] - dx[0], x[1] - dx[1]];
            if !(x[0].abs() < 50.0 && x[1].abs() < 50.0) {
                return None;
            }
            f = self.reduced(x);
            if len < 1e-14 * (1.0 + x[0].abs() + x[1].abs()) {
                break;
            }
        }
        let scale = self.residual_scale([self.c1_of(x[0], x[1]), x[0], x[1]]);
        (f[0].abs().max(f[1].abs()) <= 1e-11 * scale).then_some(x)
    }

    /// Magnitude of the individual terms of the bilinear equations at c.
    fn residual_scale(&self, c: [Real; 3]) -> Real {
        let r = self.r_mat(c);
        let big = r.iter().flatten().fold(0.0, |m: Real, x| m.max(x.abs()));
        let nr = self.nr.iter().fold(0.0, |m: Real, x| m.max(x.abs()));
        let cm = c.iter().fold(1.0, |m: Real, x| m.max(x.abs()));
        big.powi(3) * nr * cm * cm
    }

    /// Multistart Newton over a grid x grid lattice of (c2, c3) in [-2, 2]^2.
    pub fn solve(&self, grid: usize) -> Vec<[Real; 3]> {
        let mut sols: Vec<[Real; 3]> = Vec::new();
        let g = grid.max(2);
        for i in 0..g {
            for j in 0..g {
                let c2 = -2.0 + 4.0 * i as Real / (g - 1) as Real;
                let c3 = -2.0 + 4.0 * j as Real / (g - 1) as Real;
                if let Some(x) = self.newton([c2, c3]) {
                    let c = [self.c1_of(x[0], x[1]), x[0], x[1]];
                    if !sols.iter().any(|s| (0..3).all(|q| (s[q] - c[q]).abs() < 1e-7)) {
                        sols.push(c);
                    }
                }
            }
        }
        sols.sort_by(|a, b| a[2].total_cmp(&b[2]));
        sols
    }

    /// r_{k+1} (odd) or s_{k+1} (even) at t.
    pub fn node_poly_eval(&self, c: [Real; 3], t: Real) -> Real {
        let k = self.k;
        self.fam.eval(k + 1, t)
            + c[0] * self.fam.eval(k, t)
            + c[1] * self.fam.eval(k - 1, t)
            + c[2] * self.fam.eval(k - 2, t)
    }

    pub fn node_poly(&self, c: [Real; 3]) -> Poly {
        let k = self.k;
        [(k + 1, 1.0), (k, c[0]), (k - 1, c[1]), (k - 2, c[2])]
            .iter()
            .fold(Poly::zero(), |acc, &(i, w)| &acc + &self.fam.poly(i).scale(w))
    }

    /// Nodes, weights and validity flags for a solution vector c.
    pub fn materialize(&self, c: [Real; 3]) -> Result<LiftSolution> {
        let p = self.node_poly(c);
        let rt = roots(&p, 1e-7)?;
        let mut flags = LiftFlags::default();
        flags.roots_real_simple = rt.all_real_simple() && rt.real.len() == self.k + 1;
        let beta: Vec<Real> = rt
            .real
            .iter()
            .map(|&x| self.polish_node(c, x))
            .collect();
        flags.roots_in_range = flags.roots_real_simple && beta.iter().all(|&b| b > -1.0 && b < 1.0);
        let mut nodes = Vec::with_capacity(beta.len() + self.eps);
        if self.eps == 1 {
            nodes.push(-1.0);
        }
        nodes.extend(beta.iter().copied());
        let weights = if flags.roots_in_range {
            lagrange_weights(self.n, &nodes)
        } else {
            vec![Real::NAN; nodes.len()]
        };
        flags.weights_positive =
            flags.roots_in_range && weights.iter().skip(self.eps).all(|&w| w > 0.0);
        flags.interlaces_first_level = flags.roots_in_range && self.interlaces(&beta);
        let rule = QuadratureRule {
            n: self.n,
            card: self.card,
            nodes,
            weights,
            subspace: self.subspace(),
            level: 2,
        };
        Ok(LiftSolution {
            eps: self.eps,
            k: self.k,
            c,
            node_poly: p,
            beta,
            rule,
            flags,
        })
    }

    fn polish_node(&self, c: [Real; 3], mut x: Real) -> Real {
        let k = self.k;
        for _ in 0..4 {
            let idx = [(k + 1, 1.0), (k, c[0]), (k - 1, c[1]), (k - 2, c[2])];
            let (mut f, mut d) = (0.0, 0.0);
            for (i, w) in idx {
                let (v, dv) = self.fam.eval_with_deriv(i, x);
                f += w * v;
                d += w * dv;
            }
            if d == 0.0 {
                break;
            }
            let step = f / d;
            if step.abs() > 1e-6 {
                break;
            }
            x -= step;
        }
        x
    }

    /// beta_1 < alpha_1 < beta_2 < ... < alpha_k < beta_{k+1} (interior first-level nodes).
    fn interlaces(&self, beta: &[Real]) -> bool {
        let alpha = &self.first.rule.nodes[self.eps..];
        alpha.len() + 1 == beta.len()
            && alpha
                .iter()
                .enumerate()
                .all(|(i, &a)| beta[i] < a && a < beta[i + 1])
    }

    /// Materialize every solution of the system and check each against h.
    pub fn candidates(&self, grid: usize, h: &Potential) -> Vec<Candidate> {
        self.solve(grid)
            .into_iter()
            .filter_map(|c| self.materialize(c).ok())
            .map(|lift| {
                let (cert, fh) = if lift.flags.quadrature_ok() {
                    (certify_lift(&lift).ok(), FhCheck::new(h, &lift).ok())
                } else {
                    (None, None)
                };
                Candidate { lift, cert, fh }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LiftFlags {
    pub roots_real_simple: bool,
    pub roots_in_range: bool,
    pub weights_positive: bool,
    pub interlaces_first_level: bool,
}

impl LiftFlags {
    pub fn quadrature_ok(&self) -> bool {
        self.roots_real_simple && self.roots_in_range && self.weights_positive
    }

    pub fn first_failure(&self) -> Option<&'static str> {
        if !self.roots_real_simple {
            Some("roots_real_simple")
        } else if !self.roots_in_range {
            Some("roots_in_range")
        } else if !self.weights_positive {
            Some("weights_positive")
        } else if !self.interlaces_first_level {
            Some("interlaces_first_level")
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftSolution {
    pub eps: usize,
    pub k: usize,
    pub c: [Real; 3],
    /// r_{k+1} (odd) / s_{k+1} (even), monomial form.
    pub node_poly: Poly,
    /// Roots of the node polynomial, increasing.
    pub beta: Vec<Real>,
    /// Quadrature on Lambda_{n,k}; node -1 first when eps = 1.
    pub rule: QuadratureRule,
    pub flags: LiftFlags,
}

impl LiftSolution {
    pub fn beta_last(&self) -> Real {
        *self.beta.last().unwrap()
    }

    /// Interpolation multiset: -1 simple (eps = 1) and every beta doubled.
    pub fn multiset(&self) -> Multiset {
        let mut pairs: Vec<(Real, usize)> = self.beta.iter().map(|&b| (b, 2)).collect();
        if self.eps == 1 {
            pairs.push((-1.0, 1));
        }
        Multiset::new(&pairs)
    }

    /// Multiset order used for partial products.
    pub fn interpolation_order(&self) -> Vec<Real> {
        let mut t: Vec<Real> = self.beta.iter().flat_map(|&b| [b, b]).collect();
        if self.eps == 1 {
            t.insert(0, -1.0);
        }
        t
    }

    /// (t+1)^eps q_{k+1}(t)^2
    pub fn base(&self, t: Real) -> Real {
        let q = prod_eval(&self.beta, t);
        q * q * if self.eps == 1 { 1.0 + t } else { 1.0 }
    }

    fn n(&self) -> usize {
        self.rule.n
    }

    fn skip(&self) -> [usize; 2] {
        [2 * self.k + self.eps, 2 * self.k + 1 + self.eps]
    }

    /// [[<t base, P_s0>, <base, P_s0>], [<t base, P_s1>, <base, P_s1>]]
    fn ab_matrix(&self) -> [[Real; 2]; 2] {
        let mu = gegenbauer(self.n());
        let s = self.skip();
        let deg = 2 * (self.k + 1) + self.eps + 1 + s[1];
        let mut a = [[0.0; 2]; 2];
        for (row, &m) in s.iter().enumerate() {
            a[row][0] = mu.integrate(deg, |t| t * self.base(t) * mu.eval(m, t));
            a[row][1] = mu.integrate(deg, |t| self.base(t) * mu.eval(m, t));
        }
        a
    }

    /// (A, B) making f + base (A t + B) orthogonal to both skipped indices.
    fn correction(&self, amat: &[[Real; 2]; 2], degree: usize, f: impl Fn(Real) -> Real) -> Result<(Real, Real)> {
        let mu = gegenbauer(self.n());
        let s = self.skip();
        let rhs: Vec<Real> = s
            .iter()
            .map(|&m| -mu.integrate(degree + m, |t| f(t) * mu.eval(m, t)))
            .collect();
        let det = amat[0][0] * amat[1][1] - amat[0][1] * amat[1][0];
        let scale = amat.iter().flatten().fold(0.0, |m: Real, x| m.max(x.abs()));
        if det.abs() <= 1e-12 * scale * scale {
            return Err(Error::Existence(det));
        }
        Ok((
            (rhs[0] * amat[1][1] - amat[0][1] * rhs[1]) / det,
            (amat[0][0] * rhs[1] - rhs[0] * amat[1][0]) / det,
        ))
    }
}

/// One partial product H_Lambda(g_j; T) in the certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialCheck {
    pub j: usize,
    pub a: Real,
    pub b: Real,
    /// max{A+B, B-A} <= 0
    pub ineq: bool,
    /// Smallest Gegenbauer coefficient relative to the largest.
    pub min_coeff: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftCertificate {
    pub existence_det: Real,
    pub ab1: (Real, Real),
    pub ab2: (Real, Real),
    /// Sufficient path: c_i >= 0, (c3cond2), (pd-qk-1) and max{A_i+B_i, B_i-A_i} <= 0.
    pub c_nonnegative: bool,
    pub c3_condition: bool,
    pub pd_qk1: bool,
    pub ineq: bool,
    pub partials: Vec<PartialCheck>,
    pub partials_pd: bool,
}

impl LiftCertificate {
    pub fn sufficient_path(&self) -> bool {
        self.c_nonnegative
            && self.c3_condition
            && self.pd_qk1
            && self.ineq
    }

    pub fn direct_path(&self) -> bool {
        self.ineq && self.partials_pd
    }

    pub fn first_failure(&self) -> Option<String> {
        if !self.ineq {
            return Some("ineq_check".into());
        }
        self.partials
            .iter()
            .find(|p| p.min_coeff < -1e-10)
            .map(|p| format!("partial_product_pd(j={})", p.j))
    }
}

/// Certification that does not depend on h.
pub fn certify_lift(lift: &LiftSolution) -> Result<LiftCertificate> {
    let n = lift.n();
    let mu = gegenbauer(n);
    let (k, e) = (lift.k, lift.eps);
    let amat = lift.ab_matrix();
    let existence_det = amat[0][0] * amat[1][1] - amat[0][1] * amat[1][0];
    let t = lift.interpolation_order();
    let top = 2 * k + 3 + e;
    let mut partials = Vec::with_capacity(t.len());
    for j in 0..t.len() {
        let g = |x: Real| prod_eval(&t[..j], x);
        let (a, b) = if j >= 2 * k + e {
            lift.correction(&amat, j, g)?
        } else {
            (0.0, 0.0)
        };
        let h = |x: Real| g(x) + lift.base(x) * (a * x + b);
        let deg = if j >= 2 * k + e { top } else { j };
        let coeffs = mu.coefficients_fn(deg, deg, h);
        let scale = coeffs.iter().fold(0.0, |m: Real, x| m.max(x.abs()));
        let min = coeffs.iter().copied().fold(Real::INFINITY, Real::min) / scale;
        partials.push(PartialCheck {
            j,
            a,
            b,
            ineq: (a + b).max(b - a) <= 1e-12,
            min_coeff: min,
        });
    }
    let ab = |j: usize| partials.get(j).map(|p| (p.a, p.b)).unwrap_or((0.0, 0.0));
    let ab1 = ab(2 * k + e);
    let ab2 = ab(2 * k + e + 1);
    let ineq = partials.iter().all(|p| p.ineq);
    let partials_pd = partials.iter().all(|p| p.min_coeff >= -1e-10);
    let c_nonnegative = lift.c.iter().all(|&c| c >= 0.0);
    let (c3, pd) = sufficient_conditions(lift);
    Ok(LiftCertificate {
        existence_det,
        ab1,
        ab2,
        c_nonnegative,
        c3_condition: c3,
        pd_qk1: pd,
        ineq,
        partials,
        partials_pd,
    })
}

/// (c3cond2) and (pd-qk-1); in the even case the (1,1) family and the weight 1 - t^2 replace
/// (1,0) and 1 - t, and the node -1 is dropped from the partial products.
fn sufficient_conditions(lift: &LiftSolution) -> (bool, bool) {
    let n = lift.n();
    let (k, e) = (lift.k, lift.eps);
    let adj = basis(n, 1, e as u8);
    let w = |x: Real| if e == 1 { 1.0 - x * x } else { 1.0 - x };
    let b = &lift.beta;
    let th = &lift.rule.weights[e..];
    let bk1 = b[k];
    let qk = |x: Real| prod_eval(&b[..k], x);
    let d0 = th[k] * w(bk1) * qk(bk1);
    let rhs = -d0 * adj.leading(k + 1) * adj.leading(k - 2) * adj.r(k - 2) * adj.eval(k - 1, bk1)
        / adj.leading(k - 1);
    let c3 = lift.c[2] > rhs;
    let qk1 = |x: Real| prod_eval(&b[..k - 1], x);
    let bk = b[k - 1];
    let pd = (0..=k - 2).all(|j| {
        adj.eval(j, bk)
            > -(th[k] * qk1(bk1) * w(bk1) * adj.eval(j, bk1)) / (th[k - 1] * qk1(bk) * w(bk))
    });
    (c3, pd)
}

/// Necessary conditions on f^h itself: positive definite and below h.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FhCheck {
    /// Smallest Gegenbauer coefficient (index >= 1) relative to the largest.
    pub min_coeff: Real,
    pub argmin: usize,
    /// min of (h - f^h)/max(1,|h|) on the grid.
    pub margin: Real,
}

impl FhCheck {
    pub fn new(h: &Potential, lift: &LiftSolution) -> Result<Self> {
        let f = hermite_in_subspace(h, lift)?;
        let deg = f.degree();
        let coeffs = gegenbauer(lift.n()).coefficients_fn(deg, deg, |t| f.eval(t));
        let scale = coeffs.iter().fold(0.0, |m: Real, x| m.max(x.abs()));
        let (argmin, min) = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .fold((0, Real::INFINITY), |a, (i, &c)| if c < a.1 { (i, c) } else { a });
        Ok(FhCheck {
            min_coeff: min / scale,
            argmin,
            margin: grid_margin(h, |t| f.eval(t), -1.0, 1.0 - 1e-6, 4001)?,
        })
    }

    pub fn positive_definite(&self) -> bool {
        self.min_coeff >= -1e-10
    }

    pub fn below_h(&self) -> bool {
        self.margin >= -1e-9
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub lift: LiftSolution,
    /// h-independent certificate; None when the interpolant does not exist.
    pub cert: Option<LiftCertificate>,
    pub fh: Option<FhCheck>,
}

impl Candidate {
    /// Odd tau: the partial-product chain (with the A/B inequalities) must hold, since it is
    /// what certifies f^h for every absolutely monotone h. Even tau has no such chain, so
    /// only f^h itself is checked.
    pub fn admissible(&self) -> bool {
        self.lift.flags.quadrature_ok()
            && self.cert.as_ref().is_some_and(|c| self.lift.eps == 1 || c.direct_path())
            && self.fh.as_ref().is_some_and(|f| f.positive_definite() && f.below_h())
    }

    pub fn failure(&self) -> String {
        if let Some(f) = self.lift.flags.first_failure() {
            if !self.lift.flags.quadrature_ok() {
                return f.to_string();
            }
        }
        match (&self.cert, &self.fh) {
            (Some(c), Some(_)) if self.lift.eps == 0 && !c.direct_path() => {
                c.first_failure().unwrap_or_default()
            }
            (Some(_), Some(f)) if !f.positive_definite() => {
                format!("positive_definite(f_{} < 0)", f.argmin)
            }
            (Some(_), Some(f)) if !f.below_h() => "f_le_h".into(),
            (Some(_), Some(_)) => "none".into(),
            _ => "interpolant_existence".into(),
        }
    }
}

/// All candidates plus the chosen one (smallest beta_{k+1} among admissible).
pub fn solve_lift(
    n: usize,
    card: Real,
    grid: usize,
    h: &Potential,
) -> Result<(LiftSystem, Vec<Candidate>, Option<usize>)> {
    let sys = LiftSystem::new(n, card)?;
    let cands = sys.candidates(grid, h);
    let pick = cands
        .iter()
        .enumerate()
        .filter(|(_, c)| c.admissible())
        .min_by(|a, b| a.1.lift.beta_last().total_cmp(&b.1.lift.beta_last()))
        .map(|(i, _)| i);
    Ok((sys, cands, pick))
}

/// Second-level quadrature of (n, N) if a lift admissible for the Newton potential exists.
pub fn second_level_quadrature(n: usize, card: Real) -> Result<LiftSolution> {
    let (_, cands, pick) = solve_lift(n, card, DEFAULT_GRID, &Potential::Newton(n))?;
    match pick {
        Some(i) => Ok(cands[i].lift.clone()),
        None => Err(Error::NoLift(no_lift_reason(&cands))),
    }
}

fn no_lift_reason(cands: &[Candidate]) -> String {
    if cands.is_empty() {
        return "no real solution of the lift system".into();
    }
    cands
        .iter()
        .map(|c| c.failure())
        .collect::<Vec<_>>()
        .join(", ")
}

/// f^h = J + base (A t + B) in Lambda_{n,k}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceInterpolant {
    pub j: NewtonPoly,
    pub a: Real,
    pub b: Real,
    pub beta: Vec<Real>,
    pub eps: usize,
}

impl SubspaceInterpolant {
    pub fn eval(&self, t: Real) -> Real {
        let q = prod_eval(&self.beta, t);
        let base = q * q * if self.eps == 1 { 1.0 + t } else { 1.0 };
        self.j.eval(t) + base * (self.a * t + self.b)
    }

    pub fn degree(&self) -> usize {
        2 * self.beta.len() + self.eps + 1
    }

    pub fn to_poly(&self) -> Poly {
        let mut base = Poly::from_roots(&self.beta);
        base = &base * &base;
        if self.eps == 1 {
            base = base.mul_linear(-1.0);
        }
        &self.j.to_poly() + &(&base * &Poly::new(vec![self.b, self.a]))
    }
}

/// H_Lambda(h; T) for the lift's multiset.
pub fn hermite_in_subspace(h: &Potential, lift: &LiftSolution) -> Result<SubspaceInterpolant> {
    let t = lift.multiset();
    let j = hermite_interpolant(h, &t)?;
    let amat = lift.ab_matrix();
    let (a, b) = lift.correction(&amat, t.len() - 1, |x| j.eval(x))?;
    Ok(SubspaceInterpolant {
        j,
        a,
        b,
        beta: lift.beta.clone(),
        eps: lift.eps,
    })
}

/// Second-level ULB S_tau(n,N;h) with certificate.
pub fn ulb_second(n: usize, card: Real, h: &Potential) -> Result<(Real, BoundCertificate)> {
    ulb_second_capped(n, card, h, DEFAULT_TESTFN_CAP)
}

pub fn ulb_second_capped(
    n: usize,
    card: Real,
    h: &Potential,
    cap: usize,
) -> Result<(Real, BoundCertificate)> {
    let (sys, cands, pick) = solve_lift(n, card, DEFAULT_GRID, h)?;
    let i = pick.ok_or_else(|| Error::NoLift(no_lift_reason(&cands)))?;
    let cand = &cands[i];
    let lift = &cand.lift;
    let cert = cand.cert.as_ref().unwrap();
    let value = lift.rule.energy(h)?;
    let f = hermite_in_subspace(h, lift)?;
    let deg = f.degree();
    let coeffs = gegenbauer(n).coefficients_fn(deg, deg, |t| f.eval(t));
    let ulb1 = sys.first.rule.energy(h)?;
    let mut checks = BTreeMap::new();
    checks.insert(
        "quadrature_exact".into(),
        Check::at_most(lift.rule.exactness_residual(), 1e-10, true),
    );
    checks.insert("roots_real_simple".into(), Check::flag(lift.flags.roots_real_simple, true));
    checks.insert("roots_in_range".into(), Check::flag(lift.flags.roots_in_range, true));
    checks.insert("weights_positive".into(), Check::flag(lift.flags.weights_positive, true));
    checks.insert("interlacing".into(), Check::flag(lift.flags.interlaces_first_level, true));
    checks.insert(
        "existence_det".into(),
        Check::at_least(cert.existence_det.abs(), 0.0, true),
    );
    let chain = lift.eps == 0;
    checks.insert("ineq_check".into(), Check::flag(cert.ineq, chain));
    checks.insert("partial_products_pd".into(), Check::flag(cert.partials_pd, chain));
    checks.insert("sufficient_conditions".into(), Check::flag(cert.sufficient_path(), false));
    let subspace_defect = sys.subspace().membership_defect(n, deg, |t| f.eval(t));
    checks.insert("in_subspace".into(), Check::at_most(subspace_defect, 1e-10, true));
    checks.insert(
        "positive_definite".into(),
        Check::at_least(min_coefficient_rel(&coeffs), -1e-10, true),
    );
    checks.insert(
        "f_le_h".into(),
        Check::at_least(grid_margin(h, |t| f.eval(t), -1.0, 1.0 - 1e-6, 4001)?, -1e-9, true),
    );
    let via_poly = card * card * coeffs[0] - card * f.eval(1.0);
    checks.insert(
        "energy_identity".into(),
        Check::at_most((via_poly - value).abs() / value.abs().max(1.0), 1e-9, true),
    );
    checks.insert("improves_first_level".into(), Check::at_least(value - ulb1, 0.0, true));
    let tau = sys.tau();
    let tf = TestFnSummary::from_values(&second_level_testfns(lift, tau, cap), cap);
    checks.insert("lp_optimal".into(), Check::flag(tf.nonnegative(), false));
    let mut out = BoundCertificate {
        level: 2,
        n,
        card,
        tau,
        eps: lift.eps,
        potential: h.to_string(),
        value,
        nodes: lift.rule.nodes.clone(),
        weights: lift.rule.weights.clone(),
        poly: f.to_poly().coeffs().to_vec(),
        gegenbauer: coeffs,
        checks,
        testfns: Some(tf),
    };
    if !out.valid() {
        out.checks.insert("valid".into(), Check::flag(false, true));
    }
    Ok((value, out))
}

/// Q_j for j <= cap outside {1..tau, tau+3, tau+4}.
pub fn second_level_testfns(lift: &LiftSolution, tau: usize, cap: usize) -> Vec<(usize, Real)> {
    lift.rule
        .test_functions((tau + 1..=cap).filter(|&j| j != tau + 3 && j != tau + 4))
}

/// Second-level Levenshtein-type polynomial and the bounds it gives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevPoly2 {
    /// g = (t+1)^eps q_k^2 (t - beta_{k+1}) (a t^2 + b t + c)
    pub abc: [Real; 3],
    pub poly: Poly,
    /// g(1)/g_0 (should equal N); None when g fails the B_{n,s} membership checks.
    pub bound: Option<Real>,
    pub failure: Option<String>,
    /// s(n,N) >= beta_{k+1}
    pub separation: Real,
    /// L_tau(n, beta_{k+1})
    pub lev_at_beta: Real,
}

pub fn second_level_lev_poly(n: usize, lift: &LiftSolution, tau: usize) -> Result<LevPoly2> {
    let k = lift.k;
    let e = lift.eps;
    let b = lift.beta.clone();
    let core = move |t: Real| {
        let q = prod_eval(&b[..k], t);
        q * q * (t - b[k]) * if e == 1 { 1.0 + t } else { 1.0 }
    };
    let mu = gegenbauer(n);
    let skip = lift.skip();
    let deg = 2 * k + 3 + e;
    let mut rows = [[0.0; 3]; 2];
    for (r, &m) in skip.iter().enumerate() {
        for p in 0..3 {
            rows[r][p] = mu.integrate(deg + m, |t| core(t) * t.powi(p as i32) * mu.eval(m, t));
        }
    }
    // null vector of the 2 x 3 system
    let mut abc = [
        rows[0][1] * rows[1][2] - rows[0][2] * rows[1][1],
        rows[0][2] * rows[1][0] - rows[0][0] * rows[1][2],
        rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
    ];
    let norm = abc.iter().fold(0.0, |m: Real, x| m.max(x.abs()));
    if norm == 0.0 {
        return Err(Error::Singular("second-level Levenshtein null space"));
    }
    let quad = |v: &[Real; 3], t: Real| v[2] * t * t + v[1] * t + v[0];
    let sign = if core(1.0) * quad(&abc, 1.0) < 0.0 { -1.0 } else { 1.0 };
    for v in abc.iter_mut() {
        *v *= sign / norm;
    }
    let g = |t: Real| core(t) * quad(&abc, t);
    let (bound, failure) = match bound_cardinality_via_fn(n, lift.beta_last(), deg, g) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut poly = Poly::from_roots(&lift.beta[..k]);
    poly = (&poly * &poly).mul_linear(lift.beta_last());
    if e == 1 {
        poly = poly.mul_linear(-1.0);
    }
    poly = &poly * &Poly::new(abc.to_vec());
    Ok(LevPoly2 {
        abc: [abc[0], abc[1], abc[2]],
        poly,
        bound,
        failure,
        separation: lift.beta_last(),
        lev_at_beta: lev_bound_tau(n, tau, lift.beta_last()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "ULB1-LP")]
    Ulb1Lp,
    #[serde(rename = "No-ULB2")]
    NoUlb2,
    #[serde(rename = "ULB2-LP")]
    Ulb2Lp,
    #[serde(rename = "ULB2")]
    Ulb2,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Ulb1Lp => "ULB1-LP",
            Label::NoUlb2 => "No-ULB2",
            Label::Ulb2Lp => "ULB2-LP",
            Label::Ulb2 => "ULB2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub n: usize,
    pub card: Real,
    pub tau: usize,
    pub label: Label,
    /// First failed condition for No-ULB2, negative test function otherwise.
    pub reason: Option<String>,
    pub lift: Option<LiftSolution>,
    pub first_testfns: TestFnSummary,
    pub second_testfns: Option<TestFnSummary>,
}

/// Classification for the Newton potential.
pub fn classify(n: usize, card: Real) -> Result<Classification> {
    classify_with(n, card, &Potential::Newton(n), DEFAULT_TESTFN_CAP, DEFAULT_GRID)
}

pub fn classify_with(
    n: usize,
    card: Real,
    h: &Potential,
    cap: usize,
    grid: usize,
) -> Result<Classification> {
    let first = first_level_quadrature(n, card)?;
    let tau = first.params.tau;
    let tf1 = TestFnSummary::from_values(&first.rule.test_functions(tau + 1..=cap), cap);
    let mut out = Classification {
        n,
        card,
        tau,
        label: Label::Ulb1Lp,
        reason: None,
        lift: None,
        first_testfns: tf1.clone(),
        second_testfns: None,
    };
    if tf1.nonnegative() {
        return Ok(out);
    }
    let (_, cands, pick) = match solve_lift(n, card, grid, h) {
        Ok(v) => v,
        Err(e) => {
            out.label = Label::NoUlb2;
            out.reason = Some(e.to_string());
            return Ok(out);
        }
    };
    let Some(i) = pick else {
        out.label = Label::NoUlb2;
        out.reason = Some(no_lift_reason(&cands));
        return Ok(out);
    };
    let lift = cands[i].lift.clone();
    let tf2 = TestFnSummary::from_values(&second_level_testfns(&lift, tau, cap), cap);
    out.label = if tf2.nonnegative() {
        Label::Ulb2Lp
    } else {
        out.reason = Some(format!("Q_{} = {:.3e} < 0", tf2.argmin, tf2.min));
        Label::Ulb2
    };
    out.second_testfns = Some(tf2);
    out.lift = Some(lift);
    Ok(out)
}

/// Classify every integer N in [lo, hi], in parallel, output in N order.
pub fn classify_range(
    n: usize,
    lo: usize,
    hi: usize,
    h: &Potential,
    cap: usize,
) -> Vec<Result<Classification>> {
    use rayon::prelude::*;
    (lo..=hi)
        .into_par_iter()
        .map(|card| classify_with(n, card as Real, h, cap, DEFAULT_GRID))
        .collect()
}

/// Maximal runs of equal (tau, label) over consecutive N.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRun {
    pub tau: usize,
    pub label: Label,
    pub lo: usize,
    pub hi: usize,
}

pub fn compress_runs(rows: &[(usize, usize, Label)]) -> Vec<LabelRun> {
    let mut out: Vec<LabelRun> = Vec::new();
    for &(card, tau, label) in rows {
        match out.last_mut() {
            Some(r) if r.tau == tau && r.label == label && r.hi + 1 == card => r.hi = card,
            _ => out.push(LabelRun {
                tau,
                label,
                lo: card,
                hi: card,
            }),
        }
    }
    out
}
