//! Spherical codes with their inner-product spectra, moments, index sets,
//! energies and the 1/N-quadrature rule each code induces.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::levenshtein::{QuadratureRule, SubspaceSpec};
use crate::orthobasis::gegenbauer;
use crate::potentials::Potential;
use crate::scalarpoly::Poly;
use crate::{Error, Real, Result};

/// Names accepted by [`SphericalCode::builtin`].
pub const BUILTINS: [&str; 3] = ["icosahedron", "24cell", "600cell"];

/// Inner products closer than this are one spectrum value.
const CLUSTER_TOL: Real = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalCode {
    pub name: String,
    pub dim: usize,
    pub points: Vec<Vec<Real>>,
}

/// Distinct inner products over ordered pairs x != y, with relative frequencies
/// count / N^2 (so they sum to (N-1)/N).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<Real>,
    pub freqs: Vec<Real>,
    /// Ordered pair counts behind each frequency.
    pub pairs: Vec<usize>,
    pub max_inner: Real,
}

fn dot(a: &[Real], b: &[Real]) -> Real {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn phi() -> Real {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// All sign choices of the nonzero entries of v.
fn sign_orbit(v: &[Real]) -> Vec<Vec<Real>> {
    let nz: Vec<usize> = (0..v.len()).filter(|&i| v[i] != 0.0).collect();
    (0..1usize << nz.len())
        .map(|mask| {
            let mut w = v.to_vec();
            for (b, &i) in nz.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    w[i] = -w[i];
                }
            }
            w
        })
        .collect()
}

fn even_permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| p[i] != p[j]));
                    if !distinct {
                        continue;
                    }
                    let inversions = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
                    if inversions % 2 == 0 {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn icosahedron() -> Vec<Vec<Real>> {
    let s = (1.0 + phi() * phi()).sqrt();
    let mut pts = Vec::new();
    for base in sign_orbit(&[0.0, 1.0 / s, phi() / s]) {
        for shift in 0..3 {
            pts.push((0..3).map(|i| base[(i + shift) % 3]).collect());
        }
    }
    pts
}

fn cell24() -> Vec<Vec<Real>> {
    let r = 1.0 / 2f64.sqrt();
    let mut pts = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let mut v = vec![0.0; 4];
            v[i] = r;
            v[j] = r;
            pts.extend(sign_orbit(&v));
        }
    }
    pts
}

fn cell600() -> Vec<Vec<Real>> {
    // 24-cell vertices rotated to the (+-1,0,0,0), (+-1/2,+-1/2,+-1/2,+-1/2) frame
    let mut pts = Vec::new();
    for i in 0..4 {
        let mut v = vec![0.0; 4];
        v[i] = 1.0;
        pts.extend(sign_orbit(&v));
    }
    pts.extend(sign_orbit(&[0.5; 4]));
    let base = [phi() / 2.0, 0.5, 0.5 / phi(), 0.0];
    for p in even_permutations4() {
        let v: Vec<Real> = p.iter().map(|&i| base[i]).collect();
        pts.extend(sign_orbit(&v));
    }
    pts
}

impl SphericalCode {
    /// Validates dimensions, unit norms (to 1e-12) and distinctness.
    pub fn new(name: impl Into<String>, points: Vec<Vec<Real>>) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.len() < 2 || dim < 2 {
            return Err(Error::InvalidCode("need at least two points in dimension >= 2".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidCode(format!("point {i} has {} coordinates, expected {dim}", p.len())));
            }
            let nrm = dot(p, p).sqrt();
            if (nrm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidCode(format!("point {i} has norm {nrm}")));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if dot(&points[i], &points[j]) > 1.0 - 1e-12 {
                    return Err(Error::InvalidCode(format!("points {j} and {i} coincide")));
                }
            }
        }
        Ok(SphericalCode {
            name: name.into(),
            dim,
            points,
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace(['-', '_'], "");
        let pts = match key.as_str() {
            "icosahedron" => icosahedron(),
            "24cell" => cell24(),
            "600cell" => cell600(),
            _ => return Err(Error::UnknownCode(name.to_string())),
        };
        let canonical = BUILTINS.iter().find(|b| **b == key).copied().unwrap_or(name);
        SphericalCode::new(canonical, pts)
    }

    /// Built-in code with the given dimension and size, if any.
    pub fn builtin_for(n: usize, card: usize) -> Option<Self> {
        BUILTINS
            .iter()
            .map(|b| SphericalCode::builtin(b).expect("built-in codes are valid"))
            .find(|c| c.dim == n && c.card() == card)
    }

    /// One point per line, whitespace separated coordinates; blank lines and
    /// lines starting with '#' are skipped. Points are rescaled to unit norm.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: Vec<Real> = line
                .split_whitespace()
                .map(|x| x.parse::<Real>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let nrm = dot(&v, &v).sqrt();
            if !(nrm > 0.0) {
                return Err(Error::Parse(format!("line {}: zero vector", lineno + 1)));
            }
            pts.push(v.iter().map(|x| x / nrm).collect());
        }
        SphericalCode::new(name, pts)
    }

    pub fn card(&self) -> usize {
        self.points.len()
    }

    /// Inner products over ordered pairs x != y, row by row.
    fn pair_values(&self) -> Vec<Real> {
        let pts = &self.points;
        (0..pts.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                (0..pts.len())
                    .filter(move |&j| j != i)
                    .map(move |j| dot(&pts[i], &pts[j]).clamp(-1.0, 1.0))
            })
            .collect()
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut v = self.pair_values();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n2 = (self.card() * self.card()) as Real;
        let mut values: Vec<Real> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut sums: Vec<Real> = Vec::new();
        for x in v {
            match values.last() {
                Some(&last) if x - last <= CLUSTER_TOL => {
                    *counts.last_mut().unwrap() += 1;
                    *sums.last_mut().unwrap() += x;
                }
                _ => {
                    values.push(x);
                    counts.push(1);
                    sums.push(x);
                }
            }
        }
        let values: Vec<Real> = sums.iter().zip(&counts).map(|(s, &c)| s / c as Real).collect();
        Spectrum {
            max_inner: *values.last().unwrap(),
            freqs: counts.iter().map(|&c| c as Real / n2).collect(),
            pairs: counts.clone(),
            values,
        }
    }

    /// E_h = sum over ordered pairs x != y of h(<x,y>), via the spectrum.
    pub fn energy(&self, h: &Potential) -> Result<Real> {
        let sp = self.spectrum();
        let n2 = (self.card() * self.card()) as Real;
        let mut s = 0.0;
        for (&a, &r) in sp.values.iter().zip(&sp.freqs) {
            s += r * h.value(a)?;
        }
        Ok(n2 * s)
    }

    /// The same sum taken pair by pair.
    pub fn energy_direct(&self, h: &Potential) -> Result<Real> {
        self.pair_values().into_iter().map(|t| h.value(t)).sum()
    }

    /// E_f for a polynomial f.
    pub fn energy_poly(&self, f: &Poly) -> Real {
        self.pair_values().into_iter().map(|t| f.eval(t)).sum()
    }

    /// M_0..M_imax with M_i = sum over all ordered pairs (diagonal included) of P_i(<x,y>).
    pub fn moments(&self, imax: usize) -> Vec<Real> {
        let mu = gegenbauer(self.dim);
        let card = self.card() as Real;
        let off = self.pair_values().into_par_iter().map(|t| mu.eval_upto(imax, t)).reduce(
            || vec![0.0; imax + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
        off.into_iter().map(|m| m + card).collect()
    }

    pub fn moment(&self, i: usize) -> Real {
        self.moments(i)[i]
    }

    /// {1 <= i <= imax : |M_i| <= 1e-8 N^2}.
    pub fn index_set(&self, imax: usize) -> BTreeSet<usize> {
        let tol = 1e-8 * (self.card() * self.card()) as Real;
        self.moments(imax)
            .into_iter()
            .enumerate()
            .skip(1)
            .filter(|(_, m)| m.abs() <= tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest t with {1..t} inside the index set.
    pub fn design_strength(&self, imax: usize) -> usize {
        let idx = self.index_set(imax);
        (1..=imax).take_while(|i| idx.contains(i)).count()
    }

    /// The 1/N-rule with nodes at the spectrum and weights the frequencies,
    /// exact on span{P_0} plus the index set up to `imax`.
    pub fn quadrature(&self, imax: usize) -> QuadratureRule {
        let sp = self.spectrum();
        let mut indices = self.index_set(imax);
        indices.insert(0);
        QuadratureRule {
            n: self.dim,
            card: self.card() as Real,
            nodes: sp.values,
            weights: sp.freqs,
            subspace: SubspaceSpec { indices },
            level: 0,
        }
    }

    /// |E_f - (sum_i f_i M_i - f(1) N)| relative to the size of the terms.
    pub fn energy_moment_residual(&self, f: &Poly) -> Real {
        let d = f.degree();
        let coeffs = gegenbauer(self.dim).expand(f).coeffs;
        let m = self.moments(d);
        let card = self.card() as Real;
        let rhs: Real = coeffs.iter().zip(&m).map(|(a, b)| a * b).sum::<Real>() - f.eval(1.0) * card;
        let scale = coeffs.iter().zip(&m).map(|(a, b)| (a * b).abs()).sum::<Real>() + (f.eval(1.0) * card).abs();
        (self.energy_poly(f) - rhs).abs() / scale.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_sizes() {
        let sizes: Vec<(usize, usize)> = BUILTINS
            .iter()
            .map(|b| {
                let c = SphericalCode::builtin(b).unwrap();
                (c.dim, c.card())
            })
            .collect();
        assert_eq!(sizes, vec![(3, 12), (4, 24), (4, 120)]);
        assert!(SphericalCode::builtin("cube").is_err());
        assert_eq!(SphericalCode::builtin("600-cell").unwrap().name, "600cell");
    }

    #[test]
    fn even_permutations_count() {
        assert_eq!(even_permutations4().len(), 12);
    }

    #[test]
    fn spectrum_frequencies_sum() {
        for b in BUILTINS {
            let c = SphericalCode::builtin(b).unwrap();
            let sp = c.spectrum();
            let n = c.card() as Real;
            assert!((sp.freqs.iter().sum::<Real>() - (n - 1.0) / n).abs() < 1e-14);
            assert_eq!(sp.pairs.iter().sum::<usize>(), c.card() * (c.card() - 1));
        }
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(SphericalCode::parse("x", "1 0\n0 1\n-1 0\n").is_ok());
        assert!(SphericalCode::parse("x", "1 0\n1 0\n").is_err());
        assert!(SphericalCode::parse("x", "1 0\n0 a\n").is_err());
        assert!(SphericalCode::parse("x", "1 0 0\n0 1\n").is_err());
        assert!(SphericalCode::parse("x", "# only a comment\n").is_err());
    }
}
