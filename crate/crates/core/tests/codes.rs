use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ulb_core::codes::*;
use ulb_core::levenshtein::ulb_first;
use ulb_core::liftedulb::ulb_second;
use ulb_core::orthobasis::gegenbauer;
use ulb_core::potentials::Potential;
use ulb_core::scalarpoly::Poly;
use ulb_core::Real;

fn code(name: &str) -> SphericalCode {
    SphericalCode::builtin(name).unwrap()
}

#[test]
fn spectrum_600_cell() {
    let s5 = 5f64.sqrt();
    let gamma = [-1.0, -(1.0 + s5) / 4.0, -0.5, (1.0 - s5) / 4.0, 0.0, (s5 - 1.0) / 4.0, 0.5, (1.0 + s5) / 4.0];
    let freq = [1.0 / 120.0, 0.1, 1.0 / 6.0, 0.1, 0.25, 0.1, 1.0 / 6.0, 0.1];
    let sp = code("600cell").spectrum();
    assert_eq!(sp.values.len(), 8);
    for i in 0..8 {
        assert!((sp.values[i] - gamma[i]).abs() < 1e-12, "{:?}", sp.values);
        assert!((sp.freqs[i] - freq[i]).abs() < 1e-12, "{:?}", sp.freqs);
    }
}

#[test]
fn spectrum_24_cell() {
    let c = code("24cell");
    let sp = c.spectrum();
    let per_point: Vec<usize> = sp.pairs.iter().map(|p| p / c.card()).collect();
    assert_eq!(per_point, vec![1, 8, 6, 8]);
    for (a, b) in sp.values.iter().zip([-1.0, -0.5, 0.0, 0.5]) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn icosahedron_separation() {
    let sp = code("icosahedron").spectrum();
    assert!((sp.max_inner - 1.0 / 5f64.sqrt()).abs() < 1e-14);
    assert!((sp.max_inner - 0.44721).abs() < 1e-5);
}

#[test]
fn energies() {
    for (name, n, e) in [("24cell", 4, 334.0f64), ("icosahedron", 3, 98.33050), ("600cell", 4, 10790.0)] {
        let c = code(name);
        let h = Potential::Newton(n);
        let a = c.energy(&h).unwrap();
        let b = c.energy_direct(&h).unwrap();
        assert!((a / b - 1.0).abs() < 1e-10, "{name}");
        let tol = if e.fract() == 0.0 { 1e-9 * e } else { 1e-5 };
        assert!((a - e).abs() < tol, "{name}: {a}");
    }
    let c = code("600cell");
    let h = Potential::Exp(1.0);
    assert!((c.energy(&h).unwrap() / c.energy_direct(&h).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn index_sets() {
    let idx = code("600cell").index_set(19);
    let expect: Vec<usize> = (1..=19).filter(|&i| i != 12).collect();
    assert_eq!(idx.into_iter().collect::<Vec<_>>(), expect);
    assert_eq!(code("24cell").design_strength(12), 5);
    assert_eq!(code("icosahedron").design_strength(12), 5);
    for name in BUILTINS {
        let c = code(name);
        let m = c.moments(20);
        let n2 = (c.card() * c.card()) as Real;
        assert!((m[0] - n2).abs() < 1e-9 * n2);
        assert!(m.iter().all(|&x| x >= -1e-8 * n2), "{name} {m:?}");
    }
}

#[test]
fn code_quadrature_is_exact() {
    for name in BUILTINS {
        let rule = code(name).quadrature(19);
        assert!(rule.exactness_residual() <= 1e-10, "{name}");
    }
    let rule = code("600cell").quadrature(19);
    assert_eq!(rule.subspace.indices.len(), 19);
    assert!(!rule.subspace.contains(12));
    assert!(rule.test_function(12) > 1e-3);
}

#[test]
fn trivial_energies() {
    for name in BUILTINS {
        let c = code(name);
        let n = c.card() as Real;
        assert!((c.energy_poly(&Poly::constant(1.0)) - (n * n - n)).abs() < 1e-9);
        let mu = gegenbauer(c.dim);
        for j in [1, 3, 7] {
            let e = c.energy_poly(&mu.poly(j));
            assert!((e - (c.moment(j) - n)).abs() < 1e-8 * n * n, "{name} P_{j}");
        }
    }
}

#[test]
fn bounds_below_code_energies() {
    for (name, n) in [("24cell", 4), ("600cell", 4), ("icosahedron", 3)] {
        let c = code(name);
        let card = c.card() as Real;
        for h in [Potential::Newton(n), Potential::Exp(1.0), Potential::Riesz(1.0)] {
            let e = c.energy(&h).unwrap();
            let (v1, cert1) = ulb_first(n, card, &h).unwrap();
            assert!(cert1.valid());
            assert!(v1 <= e + 1e-7 * e, "{name} {h:?} level 1");
            if let Ok((v2, cert2)) = ulb_second(n, card, &h) {
                if cert2.valid() {
                    assert!(v2 <= e + 1e-7 * e, "{name} {h:?} level 2");
                }
            }
        }
    }
}

#[test]
fn import_matches_builtin() {
    let c = code("24cell");
    let text: String = c
        .points
        .iter()
        .map(|p| p.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(" ") + "\n")
        .collect();
    let d = SphericalCode::parse("imported", &format!("# 24-cell\n\n{text}")).unwrap();
    assert_eq!(d.card(), 24);
    assert_eq!(d.spectrum().values.len(), 4);
    let e = Potential::Newton(4);
    assert!((d.energy(&e).unwrap() - c.energy(&e).unwrap()).abs() < 1e-9);
}

#[test]
fn builtin_lookup() {
    assert_eq!(SphericalCode::builtin_for(4, 120).unwrap().name, "600cell");
    assert!(SphericalCode::builtin_for(4, 121).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_moment_identity(seed in any::<u64>(), which in 0usize..3, deg in 1usize..=20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<Real> = (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = code(BUILTINS[which]);
        let r = c.energy_moment_residual(&Poly::new(coeffs));
        prop_assert!(r <= 1e-9, "residual {}", r);
    }
}
