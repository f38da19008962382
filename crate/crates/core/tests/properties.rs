use proptest::prelude::*;

use nirenberg::analysis::v_sup_bound;
use nirenberg::fixedpoint::{default_radius_grid, radius_search};
use nirenberg::harmonics::{coeff_count, CoeffFunction, SphereGrid};
use nirenberg::linearized::schur_and_alpha_inv;
use nirenberg::rigor::{BigInterval, Enclosure, Interval, IntervalMatrix, NormKind, Precision, Scalar};
use nirenberg::symmetry::{pullback, s3_group, symmetrize, tetrahedral_group};

const OPS: [&str; 9] = ["add", "sub", "mul", "div", "sqrt", "exp", "powi", "abs", "max"];

fn apply<S: Scalar>(op: &str, x: &S, y: &S) -> Option<S> {
    Some(match op {
        "add" => x.clone() + y,
        "sub" => x.clone() - y,
        "mul" => x.clone() * y,
        "div" => x.try_div(y).ok()?,
        "sqrt" => x.abs().try_sqrt().ok()?,
        "exp" => x.exp(),
        "powi" => x.powi(3),
        "abs" => x.abs(),
        "max" => x.max(y),
        _ => unreachable!(),
    })
}

fn interval() -> impl Strategy<Value = (f64, f64)> {
    (-20.0..20.0f64, 0.0..2.0f64).prop_map(|(a, w)| (a, a + w))
}

fn coefficients(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, coeff_count(n))
}

fn p256() -> Precision {
    Precision::new(256).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary64_ops_contain_members(
        op in prop::sample::select(OPS.to_vec()),
        (xl, xh) in interval(),
        (yl, yh) in interval(),
        s in 0.0..=1.0f64,
        t in 0.0..=1.0f64,
    ) {
        let (x, y) = (Interval::new(xl, xh), Interval::new(yl, yh));
        let xs = (xl + s * (xh - xl)).clamp(xl, xh);
        let ys = (yl + t * (yh - yl)).clamp(yl, yh);
        if let Some(r) = apply(op, &x, &y) {
            let exact = apply(op, &BigInterval::from_f64(xs, p256()), &BigInterval::from_f64(ys, p256())).unwrap();
            prop_assert!(r.to_big().overlaps(&exact), "{op}: {r:?} misses {exact:?}");
            prop_assert!(r.lo_f64() <= r.hi_f64());
        }
    }

    #[test]
    fn ops_are_inclusion_monotone(
        op in prop::sample::select(OPS.to_vec()),
        (xl, xh) in interval(),
        (yl, yh) in interval(),
        e in (0.0..1.0f64, 0.0..1.0f64),
    ) {
        let (x, y) = (Interval::new(xl, xh), Interval::new(yl, yh));
        let wide = Interval::new(xl - e.0, xh + e.1);
        if let (Some(a), Some(b)) = (apply(op, &x, &y), apply(op, &wide, &y)) {
            prop_assert!(b.contains(&a), "{op}: {a:?} not in {b:?}");
        }
        let (bx, bw) = (x.to_big(), wide.to_big());
        let by = y.to_big();
        if let (Some(a), Some(b)) = (apply(op, &bx, &by), apply(op, &bw, &by)) {
            prop_assert!(b.contains(&a));
        }
    }

    #[test]
    fn transpose_swaps_one_and_inf_norms(v in prop::collection::vec(-5.0..5.0f64, 12)) {
        let m = IntervalMatrix::from_fn(3, 4, |i, j| Interval::point(v[4 * i + j]));
        let one = m.transpose().norm_bound(NormKind::One);
        let inf = m.norm_bound(NormKind::Inf);
        prop_assert_eq!(one, inf);
    }

    #[test]
    fn diagonal_inverse_bound_is_tight(d in prop::collection::vec(1.0..10.0f64, 2..8)) {
        let n = d.len();
        let m = IntervalMatrix::from_fn(n, n, |i, j| Interval::point(if i == j { d[i] } else { 0.0 }));
        let want = 1.0 / d.iter().cloned().fold(f64::INFINITY, f64::min);
        let b = m.verified_inverse_2norm_bound().unwrap().bound;
        prop_assert!(b.hi() >= want && b.hi() <= 1.01 * want);
    }

    #[test]
    fn quadrature_is_exact_for_polynomials(c in coefficients(6)) {
        let u = CoeffFunction::from_f64(6, &c, Precision::DOUBLE).unwrap();
        let u: CoeffFunction<Interval> = u;
        // 2k - 1 >= 6 needs k >= 4; any larger k must agree.
        for k in [4, 5, 9] {
            let grid = SphereGrid::<Interval>::gauss(6, k, Precision::DOUBLE).unwrap();
            let integral = grid.integrate(&grid.synthesize(&u));
            let exact = Interval::pi(Precision::DOUBLE).mul_f64(4.0).try_sqrt().unwrap() * u.get(0, 0);
            prop_assert!(integral.overlaps(&exact), "k = {k}: {integral:?} vs {exact:?}");
        }
    }

    #[test]
    fn gradient_bound_is_subadditive(a in coefficients(5), b in coefficients(5)) {
        let u: CoeffFunction<Interval> = CoeffFunction::from_f64(5, &a, Precision::DOUBLE).unwrap();
        let v: CoeffFunction<Interval> = CoeffFunction::from_f64(5, &b, Precision::DOUBLE).unwrap();
        let lhs = u.add(&v).gradient_norm_bound().hi();
        let rhs = u.gradient_norm_bound().hi() + v.gradient_norm_bound().hi();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn pullback_is_linear_isometry(a in coefficients(5), b in coefficients(5), g in 0usize..24) {
        let td = tetrahedral_group();
        let g = &td.elements()[g];
        let u: CoeffFunction<Interval> = CoeffFunction::from_f64(5, &a, Precision::DOUBLE).unwrap();
        let v: CoeffFunction<Interval> = CoeffFunction::from_f64(5, &b, Precision::DOUBLE).unwrap();
        let pu = pullback(&u, g).unwrap();
        prop_assert!(pu.l2_norm().overlaps(&u.l2_norm()));
        let lhs = pullback(&u.add(&v), g).unwrap();
        let rhs = pu.add(&pullback(&v, g).unwrap());
        for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!(x.overlaps(y));
        }
    }

    #[test]
    fn symmetrized_functions_are_invariant(a in coefficients(4)) {
        let u: CoeffFunction<Interval> = CoeffFunction::from_f64(4, &a, Precision::DOUBLE).unwrap();
        for group in [tetrahedral_group(), s3_group()] {
            let s = symmetrize(&u, &group).unwrap();
            for g in group.elements() {
                let back = pullback(&s, g).unwrap();
                for (x, y) in back.coeffs().iter().zip(s.coeffs()) {
                    prop_assert!(x.overlaps(y));
                }
            }
        }
    }

    #[test]
    fn potential_bound_is_monotone(k in 0.1..2.0f64, u in 0.0..3.0f64, dk in 0.0..1.0f64, du in 0.0..1.0f64) {
        let p = Precision::DOUBLE;
        let base = v_sup_bound(&Interval::from_f64(k, p), &Interval::from_f64(u, p)).hi();
        prop_assert!(v_sup_bound(&Interval::from_f64(k + dk, p), &Interval::from_f64(u, p)).hi() >= base);
        prop_assert!(v_sup_bound(&Interval::from_f64(k, p), &Interval::from_f64(u + du, p)).hi() >= base);
    }

    #[test]
    fn alpha_inv_decreases_with_gamma(alpha in 0.2..2.0f64, eta in 1.0..40.0f64, gamma in 500.0..3000.0f64, dg in 0.0..500.0f64) {
        prop_assume!(alpha > 1.01 * eta * eta / gamma);
        let p = |x: f64| Interval::point(x);
        let (_, a) = schur_and_alpha_inv(&p(alpha), &p(eta), &p(gamma)).unwrap();
        let (_, b) = schur_and_alpha_inv(&p(alpha), &p(eta), &p(gamma + dg)).unwrap();
        prop_assert!(b.hi() <= a.hi() * (1.0 + 1e-12));
    }

    #[test]
    fn refining_the_radius_grid_keeps_passes(c_inj in 1.0..100.0f64, res in 1e-12..1e-6f64, u0 in 0.5..2.0f64) {
        let p = |x: f64| Interval::point(x);
        let (k, c) = (p(0.5562984315), p(1.1890517449));
        let coarse = default_radius_grid();
        let mut fine: Vec<f64> = coarse.iter().flat_map(|&r| [r, r * 10f64.powf(0.125)]).collect();
        fine.pop();
        let a = radius_search(&p(c_inj), &p(res), &k, &p(u0), &c, &coarse).unwrap();
        let b = radius_search(&p(c_inj), &p(res), &k, &p(u0), &c, &fine).unwrap();
        if a.found {
            prop_assert!(b.found && b.report.r.hi() <= a.report.r.hi());
        }
    }
}
