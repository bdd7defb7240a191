//! Randomized invariants across the library.

use proptest::collection::vec;
use proptest::prelude::*;

use geninv_core::applied::{
    haar_basis, relu_layer_pinv, solve_least_norm_qp, tanh_layer_pinv, wavelet_threshold_roundtrip, LayerActivation,
    LeastNormQp, NeuralLayer, QpOutcome, ThresholdKind,
};
use geninv_core::core_ops::{apply_polynomial, compose, power, FiniteOperator, FpPolynomial, RealPolynomial, VectorOperator};
use geninv_core::endofunction::{drazin_inverse, exhaustive_drazin_search};
use geninv_core::numerics::{
    fp_invert, fp_solve_kernel, mp_inverse, mp_residuals, DenseMatrix, FpMatrix, PrimeField, DEFAULT_MP_TOL,
};
use geninv_core::pseudo_inverse::{BasOracle, Scalar1DOperator};
use geninv_core::set_inverse::{
    build_one_two_inverse, check_mp_axioms, count_one_two_inverses, enumerate_one_two_inverses, OneTwoInverseSpec,
};
use geninv_core::structured_inverse::{cascade_trajectory, restriction_divergence, ConvexSet};
use geninv_core::vanishing::{
    block_cycle_operator, cayley_hamilton_inverse, find_vanishing_poly, minimal_poly, power_vanishing_poly,
    set_loop_check, FpVectorOperator,
};

/// `PROPTEST_CASES` in the environment overrides the per-group default.
fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases: std::env::var("PROPTEST_CASES").ok().and_then(|s| s.parse().ok()).unwrap_or(cases),
        ..ProptestConfig::default()
    }
}

fn endofunction(max: usize) -> impl Strategy<Value = FiniteOperator> {
    (1..=max).prop_flat_map(|n| vec(0..n, n)).prop_map(|t| FiniteOperator::endo(t).unwrap())
}

fn finite_map(max: usize) -> impl Strategy<Value = FiniteOperator> {
    (1..=max, 1..=max)
        .prop_flat_map(|(v, w)| (Just(v), Just(w), vec(0..w, v)))
        .prop_map(|(v, w, t)| FiniteOperator::new(v, w, t).unwrap())
}

fn matrix(max: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max, 1..=max)
        .prop_flat_map(|(r, c)| (Just(r), Just(c), vec(-3.0..3.0f64, r * c)))
        .prop_map(|(r, c, d)| DenseMatrix::new(r, c, d).unwrap())
}

fn fp_operator() -> impl Strategy<Value = FpVectorOperator> {
    prop_oneof![(Just(2u64), 1usize..=4), (Just(3u64), 1usize..=2), (Just(5u64), 1usize..=1)]
        .prop_flat_map(|(p, d)| {
            let n = (p as usize).pow(d as u32);
            (Just(p), Just(d), vec(0..n, n))
        })
        .prop_map(|(p, d, t)| FpVectorOperator::from_table(PrimeField::new(p).unwrap(), d, t).unwrap())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn fp_combine(f: PrimeField, acc: &mut [u64], c: u64, x: &[u64]) {
    for (a, &xi) in acc.iter_mut().zip(x) {
        *a = f.add(*a, f.mul(c, xi));
    }
}

/// Least-norm point of `{eq rows} ∪ S` for every subset `S` of the
/// inequalities, keeping the feasible ones; the smallest is the optimum.
fn brute_force_qp(dim: usize, eqs: &[(Vec<f64>, f64)], ineqs: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let mut best: Option<Vec<f64>> = None;
    for mask in 0u32..(1 << ineqs.len()) {
        let rows: Vec<&(Vec<f64>, f64)> = eqs
            .iter()
            .chain(ineqs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, r)| r))
            .collect();
        let x = if rows.is_empty() {
            vec![0.0; dim]
        } else {
            let m = DenseMatrix::from_rows(&rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>()).unwrap();
            let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let x = mp_inverse(&m, DEFAULT_MP_TOL).unwrap().mul_vec(&b);
            if dist(&m.mul_vec(&x), &b) > 1e-9 {
                continue;
            }
            x
        };
        let dot = |a: &[f64]| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
        let feasible = eqs.iter().all(|(a, b)| (dot(a) - b).abs() <= 1e-9)
            && ineqs.iter().all(|(a, b)| dot(a) <= b + 1e-9);
        if feasible && best.as_ref().map_or(true, |b| norm(&x) < norm(b) - 1e-12) {
            best = Some(x);
        }
    }
    best
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn finite_powers_add(t in endofunction(7), a in 0usize..5, b in 0usize..5) {
        let lhs = power(&t, a + b).unwrap();
        let rhs = compose(&power(&t, a).unwrap(), &power(&t, b).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn polynomials_distribute_over_sum_and_product(
        m in vec(-1.0..1.0f64, 4),
        p in vec(-2.0..2.0f64, 1..4),
        q in vec(-2.0..2.0f64, 1..4),
        v in vec(-1.0..1.0f64, 2),
    ) {
        let a = DenseMatrix::new(2, 2, m).unwrap();
        let t = VectorOperator::entrywise(Scalar1DOperator::Tanh, 2).after(&VectorOperator::linear(a)).unwrap();
        let (pp, qq) = (RealPolynomial::new(p), RealPolynomial::new(q.clone()));
        let sum = apply_polynomial(&pp.add(&qq), &t, &v).unwrap();
        let parts: Vec<f64> = apply_polynomial(&pp, &t, &v).unwrap().iter()
            .zip(apply_polynomial(&qq, &t, &v).unwrap())
            .map(|(x, y)| x + y)
            .collect();
        prop_assert!(dist(&sum, &parts) <= 1e-12 * (1.0 + norm(&parts)));

        let prod = apply_polynomial(&pp.mul(&qq), &t, &v).unwrap();
        let mut expect = vec![0.0; 2];
        let mut ti = v.clone();
        for &b in &q {
            let term = apply_polynomial(&pp, &t, &ti).unwrap();
            for (e, x) in expect.iter_mut().zip(term) {
                *e += b * x;
            }
            ti = t.apply(&ti).unwrap();
        }
        prop_assert!(dist(&prod, &expect) <= 1e-12 * (1.0 + norm(&expect)) * 10.0);
    }

    #[test]
    fn fp_polynomial_product_rule(t in fp_operator(), p in vec(0u64..5, 1..4), q in vec(0u64..5, 1..4)) {
        let f = t.field();
        let pp = FpPolynomial::new(f, p);
        let qq = FpPolynomial::new(f, q);
        for v in 0..t.size() {
            let lhs = t.decode(t.eval_poly_at(&pp.mul(&qq), v));
            let mut rhs = vec![0u64; t.dim()];
            let mut ti = v;
            for i in 0..=qq.degree().unwrap_or(0) {
                fp_combine(f, &mut rhs, qq.coeff(i), &t.decode(t.eval_poly_at(&pp, ti)));
                ti = t.apply_id(ti);
            }
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn moore_penrose_residuals_and_involution(a in matrix(8)) {
        let g = mp_inverse(&a, DEFAULT_MP_TOL).unwrap();
        let scale = 1.0 + a.frobenius_norm();
        for r in mp_residuals(&a, &g).unwrap() {
            prop_assert!(r <= 1e-9 * scale, "residual {r}");
        }
        let gg = mp_inverse(&g, DEFAULT_MP_TOL).unwrap();
        prop_assert!(gg.sub(&a).unwrap().frobenius_norm() <= 1e-8 * scale);
    }

    #[test]
    fn fp_kernel_is_exact(p in prop_oneof![Just(2u64), Just(3), Just(5), Just(7)],
                          r in 1usize..5, c in 1usize..6, seed in vec(0u64..7, 30)) {
        let f = PrimeField::new(p).unwrap();
        let a = FpMatrix::new(f, r, c, seed[..r * c].iter().map(|x| x % p).collect()).unwrap();
        let ker = fp_solve_kernel(&a);
        prop_assert_eq!(a.rank() + ker.len(), c);
        for k in &ker {
            prop_assert!(a.mul_vec(k).iter().all(|&x| x == 0));
            prop_assert!(k.iter().any(|&x| x != 0));
        }
    }

    #[test]
    fn one_two_inverses_are_consistent(t in finite_map(5)) {
        let all = enumerate_one_two_inverses(&t).unwrap();
        prop_assert_eq!(all.len() as u64, count_one_two_inverses(&t));
        let g0 = build_one_two_inverse(&t, &OneTwoInverseSpec::default_for(&t)).unwrap();
        prop_assert!(all.contains(&g0));
        for g in &all {
            prop_assert!(check_mp_axioms(&t, g).unwrap().both());
            prop_assert!(check_mp_axioms(g, &t).unwrap().both());
            let tg = compose(&t, g).unwrap();
            let gt = compose(g, &t).unwrap();
            prop_assert_eq!(compose(&tg, &tg).unwrap(), tg);
            prop_assert_eq!(compose(&gt, &gt).unwrap(), gt);
        }
    }

    #[test]
    fn one_two_relation_is_symmetric(t in finite_map(5), raw in vec(0usize..5, 5)) {
        let g = FiniteOperator::from_fn(t.codomain_size(), t.domain_size(), |w| raw[w] % t.domain_size()).unwrap();
        prop_assert_eq!(check_mp_axioms(&t, &g).unwrap().both(), check_mp_axioms(&g, &t).unwrap().both());
    }

    #[test]
    fn restriction_changes_inverse_on_lost_image(
        t in finite_map(5),
        lost in any::<proptest::sample::Index>(),
        keep in vec(any::<bool>(), 5),
    ) {
        // drop every source of one image point, plus a random selection
        let img = t.image();
        let w = img[lost.index(img.len())];
        let mut subset: Vec<usize> = (0..t.domain_size()).filter(|&v| t.apply(v) != w && keep[v]).collect();
        if subset.is_empty() {
            match (0..t.domain_size()).find(|&v| t.apply(v) != w) {
                Some(v) => subset.push(v),
                None => return Ok(()),
            }
        }
        let rep = restriction_divergence(&t, &subset).unwrap();
        prop_assert!(rep.lost_image.contains(&w));
        prop_assert_eq!(rep.agreeing_pairs, 0);
    }
}

fn convex_set(dim: usize) -> impl Strategy<Value = ConvexSet> {
    prop_oneof![
        (vec(-2.0..0.0f64, dim), vec(0.0..2.0f64, dim)).prop_map(|(lo, hi)| ConvexSet::new_box(lo, hi).unwrap()),
        (vec(-1.0..1.0f64, dim), 0.1..3.0f64).prop_map(|(c, r)| ConvexSet::ball(c, r).unwrap()),
        (vec(-1.0..1.0f64, dim), -1.0..1.0f64)
            .prop_filter("nonzero normal", |(a, _)| norm(a) > 1e-3)
            .prop_map(|(a, b)| ConvexSet::halfspace(a, b).unwrap()),
    ]
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn projections_are_nonexpansive(s in convex_set(3), x in vec(-5.0..5.0f64, 3), y in vec(-5.0..5.0f64, 3)) {
        let (px, py) = (s.project(&x).unwrap(), s.project(&y).unwrap());
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-9);
        prop_assert!(s.contains(&px, 1e-9));
    }

    #[test]
    fn cascade_norms_decrease(radii in vec(0.1..5.0f64, 1..5), cube in 0.1..5.0f64, v in vec(-10.0..10.0f64, 2)) {
        let mut r = radii;
        r.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut sets = vec![ConvexSet::cube(2, -cube.max(r[0]), cube.max(r[0])).unwrap()];
        sets.extend(r.iter().map(|&ri| ConvexSet::ball(vec![0.0, 0.0], ri).unwrap()));
        let traj = cascade_trajectory(&sets, &v).unwrap();
        for p in traj.windows(2) {
            prop_assert!(norm(&p[1]) <= norm(&p[0]) + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(config(96))]

    #[test]
    fn layer_inverses_satisfy_axioms(
        (m, n, a) in (1usize..=3).prop_flat_map(|m| (m..=4).prop_flat_map(move |n| (Just(m), Just(n), vec(-2.0..2.0f64, m * n)))),
        w in vec(-0.95..0.95f64, 3),
        relu_w in vec(-3.0..3.0f64, 3),
    ) {
        let weights = DenseMatrix::new(m, n, a).unwrap();
        let Ok(tanh) = NeuralLayer::new(weights.clone(), LayerActivation::Tanh) else { return Ok(()); };
        let relu = NeuralLayer::new(weights, LayerActivation::Relu).unwrap();
        for (layer, target, g) in [
            (&tanh, &w[..m], tanh_layer_pinv as fn(&NeuralLayer, &[f64]) -> geninv_core::Result<Vec<f64>>),
            (&relu, &relu_w[..m], relu_layer_pinv),
        ] {
            let v = g(layer, target).unwrap();
            let tv = layer.forward(&v).unwrap();
            let tgt = layer.forward(&g(layer, &tv).unwrap()).unwrap();
            prop_assert!(dist(&tgt, &tv) <= 1e-8 * (1.0 + norm(target)));
            prop_assert!(dist(&g(layer, &tv).unwrap(), &v) <= 1e-8 * (1.0 + norm(&v)));
        }
    }

    #[test]
    fn qp_matches_active_set_enumeration(
        rows in vec(vec(-1.0..1.0f64, 3), 1..=7),
        x0 in vec(-1.0..1.0f64, 3),
        slack in vec(0.0..1.0f64, 7),
        with_eq in any::<bool>(),
    ) {
        let mut qp = LeastNormQp::new(3);
        let mut eqs = Vec::new();
        let mut ineqs = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let ax: f64 = r.iter().zip(&x0).map(|(p, q)| p * q).sum();
            if with_eq && i == 0 {
                qp.add_equality(r.clone(), ax).unwrap();
                eqs.push((r.clone(), ax));
            } else {
                qp.add_inequality(r.clone(), ax + slack[i] - 0.5).unwrap();
                ineqs.push((r.clone(), ax + slack[i] - 0.5));
            }
        }
        let expect = brute_force_qp(3, &eqs, &ineqs);
        match (solve_least_norm_qp(&qp, 1e-9).unwrap(), expect) {
            // Huge optima come from nearly parallel rows; there neither method
            // resolves the vertex to 1e-9, so only the solver's own KKT
            // certificate is meaningful.
            (QpOutcome::Solved(s), Some(x)) if norm(&x) > 100.0 => {
                prop_assert!(s.kkt.max() <= 1e-9);
            }
            (QpOutcome::Solved(s), Some(x)) => {
                prop_assert!(dist(&s.v, &x) <= 1e-9, "{:?} vs {:?}", s.v, x);
                let scale = 1.0 + ineqs.iter().map(|r| r.1.abs()).fold(0.0, f64::max) + norm(&x);
                let tight: Vec<usize> = ineqs.iter().enumerate()
                    .filter(|(_, (a, b))| (a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - b).abs() <= 1e-9 * scale)
                    .map(|(i, _)| i)
                    .collect();
                prop_assert_eq!(s.active, tight);
            }
            (QpOutcome::Infeasible, None) => {}
            (got, want) => prop_assert!(false, "solver {:?}, enumeration {:?}", got, want),
        }
    }

    #[test]
    fn thresholded_round_trip_is_idempotent(x in vec(-3.0..3.0f64, 8), a in 0.05..2.0f64, soft in any::<bool>()) {
        let basis = haar_basis(8).unwrap();
        let kind = if soft { ThresholdKind::Soft } else { ThresholdKind::Hard };
        let once = wavelet_threshold_roundtrip(&basis, kind, a, &x).unwrap().roundtrip;
        let twice = wavelet_threshold_roundtrip(&basis, kind, a, &once).unwrap().roundtrip;
        prop_assert!(dist(&once, &twice) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn drazin_constructive_matches_search(t in endofunction(5)) {
        let d = drazin_inverse(&t).unwrap();
        let found = exhaustive_drazin_search(&t).unwrap();
        prop_assert_eq!(found.len(), 1);
        prop_assert_eq!(Some(&found[0]), d.inverse.as_ref());
    }

    #[test]
    fn drazin_power_and_double_rules(t in endofunction(8), j in 1usize..=4) {
        let d = drazin_inverse(&t).unwrap();
        let g = d.inverse.unwrap();
        let dj = drazin_inverse(&power(&t, j).unwrap()).unwrap().inverse.unwrap();
        prop_assert_eq!(dj, power(&g, j).unwrap());
        let dd = drazin_inverse(&g).unwrap().inverse.unwrap();
        prop_assert_eq!(&dd, &compose(&power(&t, 2).unwrap(), &g).unwrap());
        prop_assert_eq!(dd == t, d.index == Some(1));
    }

    #[test]
    fn drazin_commutes_with_commutant(t in endofunction(4)) {
        let n = t.domain_size();
        let g = drazin_inverse(&t).unwrap().inverse.unwrap();
        for code in 0..n.pow(n as u32) {
            let y = FiniteOperator::from_fn(n, n, |i| code / n.pow(i as u32) % n).unwrap();
            if compose(&y, &t).unwrap() == compose(&t, &y).unwrap() {
                prop_assert_eq!(compose(&y, &g).unwrap(), compose(&g, &y).unwrap());
            }
        }
    }

    #[test]
    fn vanishing_polynomials_vanish_and_bound(t in fp_operator()) {
        let van = find_vanishing_poly(&t, None).unwrap();
        prop_assert!(t.vanishes(&van.poly));
        prop_assert!(van.poly.degree().unwrap() <= van.m * van.m + van.l);
        let min = minimal_poly(&t).unwrap();
        prop_assert!(t.vanishes(&min));
        prop_assert!(min.divides(&van.poly));
        if t.is_surjective() {
            prop_assert!(min.coeff(0) != 0);
        }
    }

    #[test]
    fn power_vanishing_degree_bound(t in fp_operator(), k in 1usize..4) {
        let min = minimal_poly(&t).unwrap();
        let m = min.degree().unwrap();
        // T₁ = T^k with l = 1, and T₁ = T with l = k.
        let q1 = power_vanishing_poly(&min, k, 1).unwrap();
        prop_assert!(q1.degree().unwrap() <= m);
        prop_assert!(t.power(k).unwrap().vanishes(&q1));
        let qk = power_vanishing_poly(&min, k, k).unwrap();
        prop_assert!(qk.degree().unwrap() <= m * k);
        prop_assert!(t.vanishes(&qk));
    }

    #[test]
    fn plain_sets_loop(t in endofunction(6)) {
        let cert = set_loop_check(&t).unwrap();
        prop_assert!(cert.holds);
    }

    #[test]
    fn cayley_hamilton_equals_gaussian(p in prop_oneof![Just(2u64), Just(3), Just(5), Just(7)],
                                       n in 1usize..=5, data in vec(0u64..7, 25)) {
        let f = PrimeField::new(p).unwrap();
        let a = FpMatrix::new(f, n, n, data[..n * n].iter().map(|x| x % p).collect()).unwrap();
        prop_assert_eq!(cayley_hamilton_inverse(&a).unwrap().inverse(), fp_invert(&a).unwrap().inverse());
    }

    #[test]
    fn block_cycles_respect_their_relation(
        (p, dim, m, k) in prop_oneof![Just((2u64, 3usize)), Just((2, 4)), Just((3, 2))]
            .prop_flat_map(|(p, d)| {
                let size = (p as usize).pow(d as u32);
                let ms: Vec<usize> = (2..=size).filter(|m| size % m == 0).collect();
                (Just(p), Just(d), proptest::sample::select(ms))
            })
            .prop_flat_map(|(p, d, m)| (Just(p), Just(d), Just(m), 0..m)),
    ) {
        let f = PrimeField::new(p).unwrap();
        let t = block_cycle_operator(f, dim, m, k).unwrap();
        let rel = FpPolynomial::monomial(f, m).sub(&FpPolynomial::monomial(f, k));
        prop_assert!(t.vanishes(&rel));
        let min = minimal_poly(&t).unwrap();
        prop_assert!(min.divides(&rel));
        prop_assert!(min.divides(&find_vanishing_poly(&t, None).unwrap().poly));
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn bas_candidates_satisfy_mp1(
        op in prop_oneof![
            Just(Scalar1DOperator::Relu),
            Just(Scalar1DOperator::Square),
            Just(Scalar1DOperator::Sine),
            (0.1..2.0f64).prop_map(|a| Scalar1DOperator::SoftThreshold { a }),
            (0.1..2.0f64).prop_map(|a| Scalar1DOperator::HardThreshold { a }),
        ],
        k in -400i64..=400,
    ) {
        let t = VectorOperator::entrywise(op, 1);
        let oracle = BasOracle::grid(&t, &[(-4.0, 4.0)], 0.01).unwrap();
        // A grid point u: the oracle source v of T(u) must reproduce T(u).
        let u = [k as f64 * 0.01];
        let tu = t.apply(&u).unwrap();
        let v = oracle.query(&tu, 0.0).unwrap().best;
        prop_assert!(dist(&t.apply(&v).unwrap(), &tu) <= 1e-12);
    }
}

/// `(v−2)³ − (v−2)` has a unique least-norm source for every w, yet the
/// source jumps where the left local maximum is overtaken.
#[test]
fn cubic_pinv_has_a_jump() {
    let t = VectorOperator::entrywise(
        Scalar1DOperator::Sampled {
            xs: (0..=8000).map(|i| -4.0 + i as f64 * 1e-3).collect(),
            ys: (0..=8000)
                .map(|i| {
                    let v = -4.0 + i as f64 * 1e-3 - 2.0;
                    v * v * v - v
                })
                .collect(),
        },
        1,
    );
    let oracle = BasOracle::grid(&t, &[(-4.0, 4.0)], 1e-3).unwrap();
    // |T'| ≤ 3.2 on the sources involved, so one grid step moves T by at most 3.2e-3.
    let slack = 0.5 * 3.2e-3;
    let g = |w: f64| oracle.query(&[w], slack).unwrap().best[0];
    let (mut lo, mut hi) = (0.0, 1.0);
    assert!(g(hi) - g(lo) > 1.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if g(mid) - g(lo) > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let peak = 2.0 / (3.0 * 3f64.sqrt());
    assert!((lo - peak).abs() <= 2.0 * slack, "jump located at {lo}");
    assert!(g(hi) - g(lo) > 1.0);
}
