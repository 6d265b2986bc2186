//! Third level for (n, N) = (4, 120): the subspaces Lambda_1, Lambda_2,
//! Lambda_3 of the 600-cell, corrected partial products, the universal
//! optimality certificate, the triangle of LP-optimal polynomials and the
//! recovery of the 600-cell inner products as quadrature nodes.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::SphericalCode;
use crate::levenshtein::{
    grid_margin, lagrange_weights, min_coefficient_rel, BoundCertificate, Check, QuadratureRule,
    SubspaceSpec,
};
use crate::orthobasis::{basis, gegenbauer};
use crate::potentials::Potential;
use crate::scalarpoly::{newton_coefficients, prod_eval, roots, Multiset, Poly};
use crate::{Error, Real, Result};

const DIM: usize = 4;
const CARD: usize = 120;
/// Highest Gegenbauer index any of the three subspaces admits.
const TOP: usize = 17;

/// Inner products of the 600-cell, ascending.
pub fn gamma() -> [Real; 8] {
    let s5 = 5f64.sqrt();
    [-1.0, -(1.0 + s5) / 4.0, -0.5, (1.0 - s5) / 4.0, 0.0, (s5 - 1.0) / 4.0, 0.5, (1.0 + s5) / 4.0]
}

/// Relative frequencies of [`gamma`].
pub fn nu() -> [Real; 8] {
    [1.0 / 120.0, 0.1, 1.0 / 6.0, 0.1, 0.25, 0.1, 1.0 / 6.0, 0.1]
}

/// The 1/120-rule formed by the 600-cell spectrum, exact on P_19 without P_12.
pub fn code_rule() -> QuadratureRule {
    QuadratureRule {
        n: DIM,
        card: CARD as Real,
        nodes: gamma().to_vec(),
        weights: nu().to_vec(),
        subspace: SubspaceSpec::upto_without(19, &[12]),
        level: 3,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lambda600 {
    L1,
    L2,
    L3,
}

impl Lambda600 {
    pub const ALL: [Lambda600; 3] = [Lambda600::L1, Lambda600::L2, Lambda600::L3];

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Lambda600::L1),
            2 => Ok(Lambda600::L2),
            3 => Ok(Lambda600::L3),
            _ => Err(Error::Parse(format!("subspace id must be 1, 2 or 3, got {id}"))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Lambda600::L1 => 1,
            Lambda600::L2 => 2,
            Lambda600::L3 => 3,
        }
    }

    /// Gegenbauer indices up to 17 left out.
    pub fn skipped(self) -> &'static [usize] {
        match self {
            Lambda600::L1 => &[11, 12],
            Lambda600::L2 => &[12, 13],
            Lambda600::L3 => &[11, 12, 13],
        }
    }

    pub fn subspace(self) -> SubspaceSpec {
        SubspaceSpec::upto_without(TOP, self.skipped())
    }

    pub fn dim(self) -> usize {
        TOP + 1 - self.skipped().len()
    }

    /// Interpolation multiset: doubled spectrum, or -1 simple for Lambda_3.
    pub fn multiset(self) -> Multiset {
        let g = gamma();
        let mut pairs: Vec<(Real, usize)> = g.iter().map(|&x| (x, 2)).collect();
        if self == Lambda600::L3 {
            pairs[0].1 = 1;
        }
        Multiset::new(&pairs)
    }

    /// Product the corrections multiply: prod (t - gamma_i)^2, with (t + 1) simple for Lambda_3.
    pub fn base(self, t: Real) -> Real {
        let g = gamma();
        let p: Real = g[1..].iter().map(|&x| (t - x) * (t - x)).product();
        match self {
            Lambda600::L3 => (t + 1.0) * p,
            _ => (t + 1.0) * (t + 1.0) * p,
        }
    }

    fn base_poly(self) -> Poly {
        let mut roots: Vec<Real> = Vec::new();
        for (x, m) in self.multiset().nodes() {
            roots.extend(std::iter::repeat_n(*x, *m));
        }
        Poly::from_roots(&roots)
    }
}

impl fmt::Display for Lambda600 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lambda_{}", self.id())
    }
}

/// Coefficients r_i int f P_i d mu for i <= TOP of a degree <= TOP function.
fn coefficients(f: impl Fn(Real) -> Real) -> Vec<Real> {
    gegenbauer(DIM).coefficients_fn(TOP, TOP, f)
}

/// Correction x (length = skipped count) making f + sum_m x_m t^m base orthogonal to the skipped indices.
fn orthogonal_correction(lambda: Lambda600, f: impl Fn(Real) -> Real) -> Result<Vec<Real>> {
    let skip = lambda.skipped();
    let m = skip.len();
    let fc = coefficients(&f);
    let mut a = DMatrix::<Real>::zeros(m, m);
    for col in 0..m {
        let bc = coefficients(|t| t.powi(col as i32) * lambda.base(t));
        for (row, &s) in skip.iter().enumerate() {
            a[(row, col)] = bc[s];
        }
    }
    let rhs = DVector::from_iterator(m, skip.iter().map(|&s| -fc[s]));
    // below degree 11 the skipped coefficients vanish up to rounding
    let fscale = fc.iter().fold(0.0, |acc: Real, x| acc.max(x.abs()));
    if rhs.iter().all(|x| x.abs() <= 1e-12 * fscale) {
        return Ok(vec![0.0; m]);
    }
    a.lu().solve(&rhs).map(|x| x.iter().copied().collect()).ok_or(Error::Singular("subspace correction"))
}

/// Max over [-1, 1] of A + B t (+ C t^2).
fn factor_max(x: &[Real]) -> Real {
    let p = |t: Real| x.iter().enumerate().map(|(i, c)| c * t.powi(i as i32)).sum::<Real>();
    let mut m = p(-1.0).max(p(1.0));
    if x.len() == 3 && x[2] != 0.0 {
        let v = -x[1] / (2.0 * x[2]);
        if v.abs() < 1.0 {
            m = m.max(p(v));
        }
    }
    m
}

/// p_j(Lambda, T; t) = g_j(t) + (A + B t [+ C t^2]) base(t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectedPartial {
    pub j: usize,
    /// (A, B) or (A, B, C).
    pub constants: Vec<Real>,
    /// Smallest Gegenbauer coefficient relative to the largest.
    pub min_coeff: Real,
    /// The correction factor is <= 0 on [-1, 1], so p_j <= g_j.
    pub below_partial: bool,
}

impl CorrectedPartial {
    pub fn positive_semidefinite(&self) -> bool {
        self.min_coeff >= -1e-10
    }
}

fn partial_centers(lambda: Lambda600) -> Vec<Real> {
    lambda.multiset().flatten()
}

/// Corrected partial products j = 0..|T|-1 for the given subspace.
pub fn corrected_partials(lambda: Lambda600) -> Result<Vec<CorrectedPartial>> {
    let centers = partial_centers(lambda);
    (0..centers.len())
        .map(|j| {
            let g = |t: Real| prod_eval(&centers[..j], t);
            let x = orthogonal_correction(lambda, g)?;
            let p = |t: Real| {
                g(t) + x.iter().enumerate().map(|(i, c)| c * t.powi(i as i32)).sum::<Real>() * lambda.base(t)
            };
            Ok(CorrectedPartial {
                j,
                min_coeff: min_coeff_all(&coefficients(p)),
                below_partial: factor_max(&x) <= 1e-12,
                constants: x,
            })
        })
        .collect()
}

fn min_coeff_all(c: &[Real]) -> Real {
    let scale = c.iter().fold(0.0, |m: Real, x| m.max(x.abs())).max(Real::MIN_POSITIVE);
    c.iter().copied().fold(Real::INFINITY, Real::min) / scale
}

/// The unique element of the subspace interpolating h on its multiset,
/// as Hermite interpolant plus base times a low degree correction.
#[derive(Clone, Debug)]
pub struct SubspaceFit {
    pub lambda: Lambda600,
    pub centers: Vec<Real>,
    pub divided: Vec<Real>,
    pub correction: Vec<Real>,
}

impl SubspaceFit {
    pub fn new<H: crate::scalarpoly::Derivatives + ?Sized>(h: &H, lambda: Lambda600) -> Result<Self> {
        let centers = partial_centers(lambda);
        let divided = newton_coefficients(h, &centers)?;
        let herm = |t: Real| newton_eval(&centers, &divided, t);
        let correction = orthogonal_correction(lambda, herm)?;
        Ok(SubspaceFit {
            lambda,
            centers,
            divided,
            correction,
        })
    }

    pub fn eval(&self, t: Real) -> Real {
        newton_eval(&self.centers, &self.divided, t)
            + self.correction.iter().enumerate().map(|(i, c)| c * t.powi(i as i32)).sum::<Real>()
                * self.lambda.base(t)
    }

    pub fn derivative(&self, t: Real) -> Real {
        self.to_poly().eval_deriv(t, 1)
    }

    pub fn coefficients(&self) -> Vec<Real> {
        coefficients(|t| self.eval(t))
    }

    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::zero();
        let mut g = Poly::constant(1.0);
        for (j, &d) in self.divided.iter().enumerate() {
            p = &p + &g.scale(d);
            if j < self.centers.len() {
                g = g.mul_linear(self.centers[j]);
            }
        }
        let corr = Poly::new(self.correction.clone());
        &p + &(&corr * &self.lambda.base_poly())
    }
}

fn newton_eval(centers: &[Real], coeffs: &[Real], t: Real) -> Real {
    let m = coeffs.len();
    let mut v = coeffs[m - 1];
    for i in (0..m - 1).rev() {
        v = v * (t - centers[i]) + coeffs[i];
    }
    v
}

/// Level-3 certificate that the 600-cell attains the bound for h.
/// For Lambda_1 and Lambda_2 the corrected partial products carry the proof;
/// Lambda_3 is checked directly on the interpolant.
pub fn verify_600cell_optimality(h: &Potential, lambda: Lambda600) -> Result<(Real, BoundCertificate)> {
    let fit = SubspaceFit::new(h, lambda)?;
    let coeffs = fit.coefficients();
    let card = CARD as Real;
    let rule = code_rule();
    let mut checks = BTreeMap::new();
    checks.insert("quadrature_exact".into(), Check::at_most(rule.exactness_residual(), 1e-10, true));
    let defect = lambda.subspace().membership_defect(DIM, TOP, |t| fit.eval(t));
    checks.insert("in_subspace".into(), Check::at_most(defect, 1e-10, true));
    let interp = gamma()
        .iter()
        .map(|&x| Ok((fit.eval(x) - h.value(x)?).abs() / h.value(x)?.abs().max(1.0)))
        .collect::<Result<Vec<Real>>>()?
        .into_iter()
        .fold(0.0, Real::max);
    checks.insert("interpolates".into(), Check::at_most(interp, 1e-9, true));
    checks.insert("positive_definite".into(), Check::at_least(min_coefficient_rel(&coeffs), -1e-10, true));
    checks.insert(
        "f_le_h".into(),
        Check::at_least(grid_margin(h, |t| fit.eval(t), -1.0, 1.0 - 1e-6, 4001)?, -1e-9, true),
    );
    let chain = lambda != Lambda600::L3;
    let parts = corrected_partials(lambda)?;
    checks.insert("partials_below".into(), Check::flag(parts.iter().all(|p| p.below_partial), chain));
    checks.insert("partials_psd".into(), Check::flag(parts.iter().all(|p| p.positive_semidefinite()), chain));
    let value = card * card * coeffs[0] - card * fit.eval(1.0);
    let via_rule = rule.energy(h)?;
    let energy = SphericalCode::builtin("600cell")?.energy(h)?;
    checks.insert(
        "energy_identity".into(),
        Check::at_most((value - via_rule).abs() / via_rule.abs().max(1.0), 1e-9, true),
    );
    checks.insert(
        "attained_by_600cell".into(),
        Check::at_most((value - energy).abs() / energy.abs().max(1.0), 1e-9, true),
    );
    let cert = BoundCertificate {
        level: 3,
        n: DIM,
        card,
        tau: 7,
        eps: 0,
        potential: h.to_string(),
        value,
        nodes: rule.nodes.clone(),
        weights: rule.weights.clone(),
        poly: fit.to_poly().coeffs().to_vec(),
        gegenbauer: coeffs,
        checks,
        testfns: None,
    };
    Ok((value, cert))
}

/// Why Lambda_3 resists the partial product argument at j = 14.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambda3Failure {
    /// (A, B, C) of the j = 14 correction.
    pub constants: [Real; 3],
    /// Zero of A + B t + C t^2 in (-1, -0.99).
    pub t_star: Real,
    /// max over [-1, t*) of p_14(Lambda_3) - g_14, positive when the chain breaks.
    pub excess: Real,
    /// The first j whose correction factor is positive somewhere on [-1, 1].
    pub first_bad: Option<usize>,
}

pub fn lambda3_failure() -> Result<Lambda3Failure> {
    let parts = corrected_partials(Lambda600::L3)?;
    let x = &parts[14].constants;
    let (a, b, c) = (x[0], x[1], x[2]);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::Roots("j = 14 correction factor has no real zero".into()));
    }
    let r = [(-b - disc.sqrt()) / (2.0 * c), (-b + disc.sqrt()) / (2.0 * c)];
    let t_star = r
        .into_iter()
        .find(|t| *t > -1.0 && *t < -0.99)
        .ok_or_else(|| Error::Roots(format!("no zero in (-1, -0.99): {r:?}")))?;
    let excess = crate::scalarpoly::chebyshev_grid(-1.0, t_star, 401)
        .into_iter()
        .map(|t| (a + b * t + c * t * t) * Lambda600::L3.base(t))
        .fold(Real::NEG_INFINITY, Real::max);
    Ok(Lambda3Failure {
        constants: [a, b, c],
        t_star,
        excess,
        first_bad: parts.iter().find(|p| !p.below_partial).map(|p| p.j),
    })
}

/// Gegenbauer coefficient i of (t+1) prod_{i>=2} (t - gamma_i)^2 t^m, m = 0, 1, 2.
fn base3_coeff(i: usize) -> [Real; 3] {
    let c: Vec<Vec<Real>> = (0..3).map(|m| coefficients(|t| t.powi(m) * Lambda600::L3.base(t))).collect();
    [c[0][i], c[1][i], c[2][i]]
}

/// The 12th Gegenbauer coefficient of (A + B t + C t^2) (t+1) prod (t - gamma_i)^2,
/// as multipliers of (A, B, C). Vanishing forces 5A = -6(B + C).
pub fn twelve_relation() -> [Real; 3] {
    base3_coeff(12)
}

/// f_{B,C} - f_{h,Lambda_1} = base_3(t) (B (t - 6/5) + C (t^2 - 6/5)).
fn bc_diff(b: Real, c: Real, t: Real) -> Real {
    Lambda600::L3.base(t) * (b * (t - 1.2) + c * (t * t - 1.2))
}

/// Linear functionals (coefficient of B, coefficient of C).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub b: Real,
    pub c: Real,
}

impl Functional {
    pub fn at(&self, b: Real, c: Real) -> Real {
        self.b * b + self.c * c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub potential: String,
    /// 13th Gegenbauer coefficient of f_{h,Lambda_1}.
    pub alpha: Real,
    /// Derivative at -1 of the difference.
    pub lambda12: Functional,
    /// Derivative at +1 of the difference.
    pub slope_at_one: Functional,
    /// 11th Gegenbauer coefficient of the difference.
    pub lambda13: Functional,
    /// 13th Gegenbauer coefficient of the difference.
    pub lambda23: Functional,
    /// (B_k, C_k), k = 1, 2, 3.
    pub vertices: [(Real, Real); 3],
    /// Coefficientwise distance of f_{B_k,C_k} to f_{h,Lambda_k}, relative.
    pub vertex_mismatch: [Real; 3],
    /// Worst violation of the necessary conditions over sampled convex combinations.
    pub interior_violation: Real,
    pub degenerate: bool,
}

/// Gegenbauer coefficients of f_{h,Lambda_1} + bc_diff.
fn bc_coefficients(base: &[Real], b: Real, c: Real) -> Vec<Real> {
    let d = coefficients(|t| bc_diff(b, c, t));
    base.iter().zip(d).map(|(x, y)| x + y).collect()
}

pub fn optimal_triangle(h: &Potential) -> Result<TriangleReport> {
    let fits = [
        SubspaceFit::new(h, Lambda600::L1)?,
        SubspaceFit::new(h, Lambda600::L2)?,
        SubspaceFit::new(h, Lambda600::L3)?,
    ];
    let coeffs: Vec<Vec<Real>> = fits.iter().map(|f| f.coefficients()).collect();
    let base = &coeffs[0];
    let alpha = base[13];
    let d_b = coefficients(|t| bc_diff(1.0, 0.0, t));
    let d_c = coefficients(|t| bc_diff(0.0, 1.0, t));
    // d/dt at -1 of (t+1) q(t) is q(-1)
    let q = |b: Real, c: Real| {
        let t: Real = -1.0;
        gamma()[1..].iter().map(|&x| (t - x) * (t - x)).product::<Real>() * (b * (t - 1.2) + c * (t * t - 1.2))
    };
    let lambda12 = Functional {
        b: q(1.0, 0.0),
        c: q(0.0, 1.0),
    };
    let d1 = |b: Real, c: Real| {
        let p = Lambda600::L3.base_poly();
        let e = Poly::new(vec![-1.2 * b - 1.2 * c, b, c]);
        (&p * &e).eval_deriv(1.0, 1)
    };
    let slope_at_one = Functional {
        b: d1(1.0, 0.0),
        c: d1(0.0, 1.0),
    };
    let lambda13 = Functional { b: d_b[11], c: d_c[11] };
    let lambda23 = Functional { b: d_b[13], c: d_c[13] };
    let solve = |l1: Functional, r1: Real, l2: Functional, r2: Real| {
        let det = l1.b * l2.c - l1.c * l2.b;
        ((r1 * l2.c - l1.c * r2) / det, (l1.b * r2 - r1 * l2.b) / det)
    };
    let vertices = [
        (0.0, 0.0),
        solve(lambda12, 0.0, lambda23, -alpha),
        solve(lambda13, 0.0, lambda23, -alpha),
    ];
    let mut vertex_mismatch = [0.0; 3];
    for k in 0..3 {
        let (b, c) = vertices[k];
        let f = bc_coefficients(base, b, c);
        let scale = coeffs[k].iter().fold(0.0, |m: Real, x| m.max(x.abs()));
        vertex_mismatch[k] = f.iter().zip(&coeffs[k]).map(|(x, y)| (x - y).abs()).fold(0.0, Real::max) / scale;
    }
    let degenerate = alpha <= 1e-12 * base.iter().fold(0.0, |m: Real, x| m.max(x.abs()));
    let mut interior_violation: Real = 0.0;
    let hp1 = h.eval(-1.0, 1)?;
    for &(w1, w2) in &[(1.0 / 3.0, 1.0 / 3.0), (0.6, 0.2), (0.2, 0.6), (0.2, 0.2), (0.5, 0.5), (0.0, 0.5)] {
        let w3 = 1.0 - w1 - w2;
        let b = w1 * vertices[0].0 + w2 * vertices[1].0 + w3 * vertices[2].0;
        let c = w1 * vertices[0].1 + w2 * vertices[1].1 + w3 * vertices[2].1;
        let f = bc_coefficients(base, b, c);
        let scale = f.iter().fold(0.0, |m: Real, x| m.max(x.abs()));
        // (a) f_12 = 0 and f_j >= 0
        interior_violation = interior_violation.max(f[12].abs() / scale);
        interior_violation = interior_violation.max(-f.iter().copied().fold(Real::INFINITY, Real::min) / scale);
        // (b), (c): the difference vanishes to second order at gamma_2..gamma_8 and at -1
        let fv = |t: Real| fits[0].eval(t) + bc_diff(b, c, t);
        for &g in &gamma() {
            let hv = h.value(g)?;
            interior_violation = interior_violation.max((fv(g) - hv).abs() / hv.abs().max(1.0));
        }
        let dfm1 = fits[0].derivative(-1.0) + lambda12.at(b, c);
        interior_violation = interior_violation.max((dfm1 - hp1) / hp1.abs().max(1.0));
    }
    Ok(TriangleReport {
        potential: h.to_string(),
        alpha,
        lambda12,
        slope_at_one,
        lambda13,
        lambda23,
        vertices,
        vertex_mismatch,
        interior_violation,
        degenerate,
    })
}

/// Solution of the third-level node system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThirdLevelNodes {
    pub variant: Lambda600,
    /// Coefficients of P_7..P_3 in q_8 = P_8 + c_1 P_7 + ... + c_5 P_3 (adjacent family).
    pub c: [Real; 5],
    pub nodes: Vec<Real>,
    pub weights: Vec<Real>,
    /// Largest bilinear residual relative to the size of its terms.
    pub residual: Real,
    /// Exactness residual of the recovered rule on the variant's subspace.
    pub exactness: Real,
    /// Distinct real solutions found over all starts.
    pub solutions: usize,
}

/// Precomputed system for q_8 with L = (1-t) q_8 r orthogonal to two skipped indices.
struct NodeSystem {
    skip: [usize; 2],
    /// m[s][a][b] = int (1-t) P_a P_b P_{skip[s]} d mu, family indices 8, 7, ..., 3
    m: [[[Real; 6]; 6]; 2],
    nr: [Real; 6],
    ii: [Real; 6],
}

const FAMILY: [usize; 6] = [8, 7, 6, 5, 4, 3];

impl NodeSystem {
    fn new(variant: Lambda600) -> Result<Self> {
        let skip = match variant {
            Lambda600::L1 => [11, 12],
            Lambda600::L2 => [12, 13],
            Lambda600::L3 => return Err(Error::NoLift("node recovery uses Lambda_1 or Lambda_2".into())),
        };
        let fam = basis(DIM, 1, 0);
        let mu = gegenbauer(DIM);
        let rule = mu.gauss_rule(20);
        let mut m = [[[0.0; 6]; 6]; 2];
        let mut nr = [0.0; 6];
        let mut ii = [0.0; 6];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let p: Vec<Real> = FAMILY.iter().map(|&i| fam.eval(i, x)).collect();
            let g = [mu.eval(skip[0], x), mu.eval(skip[1], x)];
            let wx = w * (1.0 - x);
            for a in 0..6 {
                nr[a] += wx * p[a] * p[a];
                ii[a] += w * p[a];
                for b in 0..6 {
                    for s in 0..2 {
                        m[s][a][b] += wx * p[a] * p[b] * g[s];
                    }
                }
            }
        }
        Ok(NodeSystem { skip, m, nr, ii })
    }

    fn full(c: &[Real; 5]) -> [Real; 6] {
        [1.0, c[0], c[1], c[2], c[3], c[4]]
    }

    fn r_mat(&self, c: &[Real; 5]) -> [[Real; 6]; 2] {
        let cc = Self::full(c);
        let mut r = [[0.0; 6]; 2];
        for s in 0..2 {
            for a in 0..6 {
                r[s][a] = (0..6).map(|b| self.m[s][a][b] * cc[b]).sum();
            }
        }
        r
    }

    /// Determinant of the (d4, d5) system relative to its entries.
    fn det_rel(&self, c: &[Real; 5]) -> Real {
        let r = self.r_mat(c);
        let big = r.iter().flatten().fold(0.0, |m: Real, x| m.max(x.abs()));
        (r[0][4] * r[1][5] - r[0][5] * r[1][4]).abs() / (big * big)
    }

    /// Four Cramer-scaled bilinear equations and the linear one.
    fn residuals(&self, c: &[Real; 5]) -> [Real; 5] {
        let cc = Self::full(c);
        let r = self.r_mat(c);
        let det = r[0][4] * r[1][5] - r[0][5] * r[1][4];
        let mut out = [0.0; 5];
        for unit in 0..4 {
            let rhs = [-r[0][unit], -r[1][unit]];
            let d4 = rhs[0] * r[1][5] - r[0][5] * rhs[1];
            let d5 = r[0][4] * rhs[1] - rhs[0] * r[1][4];
            out[unit] = cc[unit] * self.nr[unit] * det + d4 * cc[4] * self.nr[4] + d5 * cc[5] * self.nr[5];
        }
        let total: Real = cc.iter().sum();
        out[4] = (0..6).map(|a| cc[a] * self.ii[a]).sum::<Real>() - total / CARD as Real;
        out
    }

    fn scale(&self, c: &[Real; 5]) -> Real {
        let cc = Self::full(c);
        let big = self.m.iter().flatten().flatten().fold(0.0, |m: Real, x| m.max(x.abs()));
        let nr = self.nr.iter().fold(0.0, |m: Real, x| m.max(x.abs()));
        let cm = cc.iter().fold(1.0, |m: Real, x| m.max(x.abs()));
        big * big * nr * cm.powi(3)
    }

    fn newton(&self, mut c: [Real; 5]) -> Option<[Real; 5]> {
        let mut f = self.residuals(&c);
        for _ in 0..80 {
            let mut jac = DMatrix::<Real>::zeros(5, 5);
            for v in 0..5 {
                let step = 1e-7 * c[v].abs().max(1.0);
                let (mut cp, mut cm) = (c, c);
                cp[v] += step;
                cm[v] -= step;
                let (fp, fm) = (self.residuals(&cp), self.residuals(&cm));
                for e in 0..5 {
                    jac[(e, v)] = (fp[e] - fm[e]) / (2.0 * step);
                }
            }
            let dx = jac.lu().solve(&DVector::from_row_slice(&f))?;
            let len = dx.norm();
            let shrink = if len > 0.5 { 0.5 / len } else { 1.0 };
            for v in 0..5 {
                c[v] -= shrink * dx[v];
            }
            if c.iter().any(|x| !(x.abs() < 20.0)) {
                return None;
            }
            f = self.residuals(&c);
            if len < 1e-14 {
                break;
            }
        }
        let worst = f[..4].iter().fold(0.0, |m: Real, x| m.max(x.abs()));
        (worst <= 1e-11 * self.scale(&c) && f[4].abs() <= 1e-13).then_some(c)
    }

    fn node_poly(c: &[Real; 5]) -> Poly {
        let fam = basis(DIM, 1, 0);
        let cc = Self::full(c);
        FAMILY
            .iter()
            .zip(cc)
            .fold(Poly::zero(), |acc, (&i, w)| &acc + &fam.poly(i).scale(w))
    }
}

/// Default number of random Newton starts for [`third_level_nodes`].
pub const NODE_STARTS: usize = 400;

/// Multistart Newton for q_8 from seeded random starts in [-0.5, 1.5]^5.
/// Solutions on the singular set of the (d4, d5) system are discarded; the
/// result is the first one whose roots are eight distinct nodes in [-1, 1)
/// with positive weights forming a rule exact on the subspace.
pub fn third_level_nodes(variant: Lambda600, seed: u64, starts: usize) -> Result<ThirdLevelNodes> {
    let sys = NodeSystem::new(variant)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sols: Vec<[Real; 5]> = Vec::new();
    for _ in 0..starts.max(1) {
        let x0: [Real; 5] = std::array::from_fn(|_| rng.random_range(-0.5..1.5));
        if let Some(c) = sys.newton(x0).filter(|c| sys.det_rel(c) > 1e-8) {
            if !sols.iter().any(|s| (0..5).all(|i| (s[i] - c[i]).abs() < 1e-7)) {
                sols.push(c);
            }
        }
    }
    let found = sols.len();
    for c in sols {
        let p = NodeSystem::node_poly(&c);
        let rt = roots(&p, 1e-7)?;
        if !rt.all_real_simple() || rt.real.len() != 8 {
            continue;
        }
        let mut nodes = rt.real;
        if nodes[0] < -1.0 - 1e-7 || nodes[7] >= 1.0 {
            continue;
        }
        // the smallest node sits at -1 up to rounding of the root finder
        if (nodes[0] + 1.0).abs() < 1e-7 {
            nodes[0] = nodes[0].max(-1.0);
        }
        let weights = lagrange_weights(DIM, &nodes);
        if weights.iter().any(|&w| w <= 0.0) {
            continue;
        }
        let rule = QuadratureRule {
            n: DIM,
            card: CARD as Real,
            nodes: nodes.clone(),
            weights: weights.clone(),
            subspace: variant.subspace(),
            level: 3,
        };
        let exactness = rule.exactness_residual();
        if exactness > 1e-10 {
            continue;
        }
        let r = sys.residuals(&c);
        return Ok(ThirdLevelNodes {
            variant,
            c,
            nodes,
            weights,
            residual: r[..4].iter().fold(0.0, |m: Real, x| m.max(x.abs())) / sys.scale(&c),
            exactness,
            solutions: found,
        });
    }
    Err(Error::NoLift(format!(
        "no admissible node polynomial among {found} solutions of the {} system (skip {:?})",
        variant, sys.skip
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subspace_dimensions() {
        let dims: Vec<usize> = Lambda600::ALL.iter().map(|l| l.dim()).collect();
        assert_eq!(dims, vec![16, 16, 15]);
        for l in Lambda600::ALL {
            assert_eq!(l.subspace().indices.len(), l.dim());
            assert_eq!(l.multiset().len(), l.dim());
        }
    }

    #[test]
    fn base_matches_product() {
        for l in Lambda600::ALL {
            let p = l.base_poly();
            for t in [-0.9, -0.3, 0.2, 0.95] {
                assert!((p.eval(t) - l.base(t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factor_max_cases() {
        assert_eq!(factor_max(&[-1.0, 0.5]), -0.5);
        assert!((factor_max(&[0.0, 0.0, -1.0]) - 0.0).abs() < 1e-15);
        assert_eq!(factor_max(&[-2.0, 0.0, 1.0]), -1.0);
    }
}
