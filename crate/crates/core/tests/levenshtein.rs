use ulb_core::levenshtein::*;
use ulb_core::orthobasis::gegenbauer;
use ulb_core::potentials::Potential;
use ulb_core::Real;

fn close(a: Real, b: Real, tol: Real) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn first_level_24_cell() {
    let fl = first_level_quadrature(4, 24.0).unwrap();
    let x = [-0.817352, -0.257597, 0.47495];
    let w = [0.138436, 0.433999, 0.385897];
    for i in 0..3 {
        assert!(close(fl.rule.nodes[i], x[i], 1e-5), "{:?}", fl.rule.nodes);
        assert!(close(fl.rule.weights[i], w[i], 1e-5), "{:?}", fl.rule.weights);
    }
    let q: Vec<Real> = fl.rule.test_functions(6..=12).into_iter().map(|p| p.1).collect();
    // Q_8 = -3/125 exactly
    let expect = [0.085714, 0.16, -0.024, -0.02048, 0.064233, 0.036864, 0.059833];
    for (a, b) in q.iter().zip(expect) {
        assert!(close(*a, b, 1e-6), "{q:?}");
    }
    for (j, qj) in fl.rule.test_functions(1..=5) {
        assert!(qj.abs() < 1e-12, "Q_{j} = {qj}");
    }
}

#[test]
fn first_level_600_cell_size() {
    let fl = first_level_quadrature(4, 120.0).unwrap();
    let x = [-0.93562791, -0.72657303, -0.38104005, 0.04406649, 0.46777287, 0.8072637];
    for i in 0..6 {
        assert!(close(fl.rule.nodes[i], x[i], 1e-7));
    }
    let (v, cert) = ulb_first(4, 120.0, &Potential::Newton(4)).unwrap();
    assert!(close(v, 10786.857, 1e-3), "{v}");
    assert!(cert.valid(), "{:?}", cert.failed());
    let q = fl.rule.test_functions(12..=15);
    assert!(q[0].1 > 0.0 && q[1].1 > 0.0 && q[2].1 < 0.0 && q[3].1 < 0.0);
}

#[test]
fn solve_s_examples() {
    assert!(close(solve_s(4, 24.0).unwrap(), 0.47495, 1e-5));
    assert!(close(solve_s(3, 13.0).unwrap(), 0.48937, 1e-5));
    assert!(close(solve_s(5, 32.0).unwrap(), 0.39779, 1e-5));
    for (n, card) in [(4, 24.0), (3, 17.0), (8, 500.0)] {
        let s = solve_s(n, card).unwrap();
        let tau = tau_of(n, card).unwrap().tau;
        assert!((lev_bound_tau(n, tau, s) - card).abs() <= 1e-10 * card);
    }
}

#[test]
fn lev_bound_examples() {
    let (l, tau) = lev_bound(4, solve_s(4, 24.0).unwrap()).unwrap();
    assert_eq!(tau, 5);
    assert!(close(l, 24.0, 1e-9));
    let (l, _) = lev_bound(3, 1.0 / 5f64.sqrt()).unwrap();
    assert!(close(l, 12.0, 1e-9));
}

#[test]
fn ulb_first_table_values() {
    let cases = [
        (3, 12.0, 98.33050),
        (3, 13.0, 117.50227),
        (4, 24.0, 333.0),
        (4, 30.0, 546.0),
        (3, 16.0, 185.56365),
        (5, 40.0, 765.21089),
        (4, 14.0, 98.0),
    ];
    for (n, card, expect) in cases {
        let (v, cert) = ulb_first(n, card, &Potential::Newton(n)).unwrap();
        assert!(close(v, expect, 1e-4), "({n},{card}) {v}");
        assert!(cert.valid(), "({n},{card}) {:?}", cert.failed());
    }
}

#[test]
fn endpoint_coincidence() {
    for n in [3, 4, 5, 8] {
        for tau in 1..=10 {
            let (lo, hi) = interval(n, tau);
            let d = dgs_bound(n, tau) as Real;
            let d1 = dgs_bound(n, tau + 1) as Real;
            assert!((lev_bound_tau(n, tau, lo) / d - 1.0).abs() < 1e-9, "n={n} tau={tau} lo");
            assert!((lev_bound_tau(n, tau, hi) / d1 - 1.0).abs() < 1e-9, "n={n} tau={tau} hi");
            assert!((lev_bound_tau(n, tau + 1, hi) / d1 - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn lev_bound_increasing_on_interval() {
    for n in [3, 4, 8] {
        for tau in 2..=8 {
            let (lo, hi) = interval(n, tau);
            let mut last = Real::NEG_INFINITY;
            for i in 0..=400 {
                let s = lo + (hi - lo) * i as Real / 400.0;
                let l = lev_bound_tau(n, tau, s);
                assert!(l > last - 1e-9 * l.abs());
                last = l;
            }
        }
    }
}

#[test]
fn boundary_card_uses_left_closed_tau() {
    // N = D(4,5) = 20: tau = 5 with alpha_1 = -1; the tau = 4 branch gives the same bound
    let fl = first_level_quadrature(4, 20.0).unwrap();
    assert_eq!(fl.params.tau, 5);
    assert!(close(fl.rule.nodes[0], -1.0, 1e-12));
    assert!(fl.rule.exactness_residual() < 1e-10);
    let (v, _) = ulb_first(4, 20.0, &Potential::Newton(4)).unwrap();
    assert!(close(v, 221.0, 1e-6));
}

#[test]
fn ulb_first_monotone_in_card() {
    let h = Potential::Newton(5);
    let mut last = 0.0;
    for i in 0..40 {
        let card = 30.0 + 0.5 * i as Real;
        let v = ulb_first(5, card, &h).unwrap().0;
        assert!(v > last);
        last = v;
    }
}

#[test]
fn first_level_nodes_move_right_with_card() {
    let mut last = vec![-2.0; 3];
    for card in 21..=29 {
        let fl = first_level_quadrature(4, card as Real).unwrap();
        for (a, b) in fl.rule.nodes.iter().zip(&last) {
            assert!(a > b);
        }
        last = fl.rule.nodes.clone();
    }
}

#[test]
fn christoffel_darboux() {
    use ulb_core::orthobasis::basis;
    for n in [3, 4, 5, 8, 9] {
        let mu = gegenbauer(n);
        let adj = basis(n, 1, 0);
        for i in 0..=8 {
            let sr: Real = (0..=i).map(|j| mu.r(j)).sum();
            for p in 0..50 {
                let t = -1.0 + 2.0 * p as Real / 49.0;
                let lhs = adj.eval(i, t) * sr;
                let rhs: Real = (0..=i).map(|j| mu.r(j) * mu.eval(j, t)).sum();
                assert!((lhs - rhs).abs() < 1e-10 * sr, "n={n} i={i} t={t}");
            }
        }
    }
}
