//! Problem-specific bounds for the prescribed curvature `K = Y_32`: norms of
//! `K`, the Sobolev embedding constant, the residual `||F(u0)||_{L^2}` and
//! `||V||_∞` for the potential `V = 2K e^{2u0}`.
//!
//! The residual splits as `F(u0) = R_p - T_p` with `E_p` the degree-`p`
//! Taylor polynomial of `exp`:
//! `R_p = 1 + Δu0 - K E_p(2u0)` is a spherical polynomial of degree
//! `pN + deg K`, so `||R_p||^2` is integrated exactly by a Gauss product
//! rule, and `||T_p|| <= ||K||_{L^2} e^{2ū} (2ū)^{p+1} / (p+1)!` with
//! `ū >= sup |u0|`.

use serde::{Deserialize, Serialize};

use crate::harmonics::{CoeffFunction, Samples, SphereGrid};
use crate::rigor::mpfr::{MpFloat, Round};
use crate::rigor::{BigInterval, Enclosure, Precision, Scalar};
use crate::Error;

/// Terms summed explicitly in the embedding-constant series.
pub const EMBEDDING_TERMS: u64 = 1_000_000;

/// `K = Y_32` as a coefficient function of degree 3.
pub fn prescribed_curvature<S: Scalar>(prec: Precision) -> CoeffFunction<S> {
    CoeffFunction::basis(3, 3, 2, prec)
}

/// `max_{[-1, 1]} |x (1 - x^2)| = 2 / (3 √3)`, attained at `x = 1/√3`.
pub fn cubic_max<S: Scalar>(prec: Precision) -> Result<S, Error> {
    let three = S::from_i64(3, prec);
    Ok(S::from_i64(2, prec).try_div(&(three.clone() * three.try_sqrt()?))?)
}

/// `||Y_32||_∞ = sqrt(105 / 16π) max |z (1 - z^2)|`, using
/// `Y_32 = sqrt(105 / 16π) z (x^2 - y^2)` and `|x^2 - y^2| <= 1 - z^2`.
pub fn k_sup_bound<S: Scalar>(prec: Precision) -> Result<S, Error> {
    let c = S::from_i64(105, prec).try_div(&(S::pi(prec) * S::from_i64(16, prec)))?;
    Ok(c.try_sqrt()? * cubic_max::<S>(prec)?)
}

/// `||Y_32||_{L^2} = 1` by orthonormality.
pub fn k_l2_norm<S: Scalar>(prec: Precision) -> S {
    S::one(prec)
}

/// `8 / (2l+1)^3 = (l + 1/2)^{-3}` summed over `l < terms` with directed
/// rounding, plus the tail enclosure
/// `[1 / (2 (M + 1/2)^2), 1 / (2 (M + 1/2)^2) + (M + 1/2)^{-3}]`
/// from comparison with `∫_M^∞ (x + 1/2)^{-3} dx`.
fn cube_series(terms: u64, bits: u32) -> BigInterval {
    let eight = MpFloat::from_i64(8, bits, Round::Nearest);
    let mut lo = MpFloat::from_i64(0, bits, Round::Nearest);
    let mut hi = lo.clone();
    for l in 0..terms {
        let n = (2 * l + 1) as i64;
        let cube = MpFloat::from_i64(n * n * n, 64, Round::Nearest);
        lo = lo.add(&eight.div(&cube, bits, Round::Down), bits, Round::Down);
        hi = hi.add(&eight.div(&cube, bits, Round::Up), bits, Round::Up);
    }
    let prec = Precision::new(bits).expect("at least 53 bits");
    let m = BigInterval::from_i64(2 * terms as i64 + 1, prec).try_div(&BigInterval::from_i64(2, prec));
    let m = m.expect("nonzero");
    let two = BigInterval::from_i64(2, prec);
    let integral = BigInterval::one(prec).try_div(&(two * m.sqr())).expect("nonzero");
    let last = BigInterval::one(prec).try_div(&m.powi(3)).expect("nonzero");
    let tail = BigInterval::new(integral.lo.clone(), (integral + last).hi);
    BigInterval::new(lo, hi) + tail
}

/// `C_20 = ((1/2π) Σ_{l>=0} (l + 1/2)^{-3})^{1/2}` with the series summed
/// over `terms` terms plus a rigorous tail.
pub fn sobolev_series_constant<S: Scalar>(terms: u64, prec: Precision) -> Result<S, Error> {
    let bits = prec.bits().max(64) + 64;
    let bp = Precision::new(bits)?;
    let sum = cube_series(terms, bits);
    let two_pi = BigInterval::pi(bp) * BigInterval::from_i64(2, bp);
    Ok(S::from_big(&sum.try_div(&two_pi)?.try_sqrt()?))
}

/// `C_emb = sqrt(625/592) C_20`, with `||u||_∞ <= C_emb ||u||_{H^2}` for the
/// norm `||u||_{H^2}^2 = Σ (1 + λ_l^2) |c_lm|^2`.
pub fn embedding_constant<S: Scalar>(prec: Precision) -> Result<S, Error> {
    let factor = S::from_i64(625, prec).try_div(&S::from_i64(592, prec))?.try_sqrt()?;
    Ok(factor * sobolev_series_constant::<S>(EMBEDDING_TERMS, prec)?)
}

/// `16 * 625 (1 + l^2 (l+1)^2) - 592 (2l + 1)^4`, i.e. `16 * 592` times the
/// gap in `(l + 1/2)^4 <= (625/592)(1 + l^2 (l+1)^2)`; exact.
pub fn embedding_weight_margin(l: u64) -> i128 {
    let l = l as i128;
    let a = l * l * (l + 1) * (l + 1);
    16 * 625 * (1 + a) - 592 * (2 * l + 1).pow(4)
}

/// `e^{x} x^{p+1} / (p+1)!`, the remainder bound of `E_p` on `[-x, x]`.
pub fn taylor_tail<S: Scalar>(x: &S, p: usize) -> Result<S, Error> {
    let prec = x.precision();
    let mut t = x.exp();
    for j in 1..=p + 1 {
        t = (t * x).try_div(&S::from_i64(j as i64, prec))?;
    }
    Ok(t)
}

/// `1/j!` for `j <= p`.
fn inverse_factorials<S: Scalar>(p: usize, prec: Precision) -> Result<Vec<S>, Error> {
    let mut out = vec![S::one(prec)];
    for j in 1..=p {
        let next = out[j - 1].try_div(&S::from_i64(j as i64, prec))?;
        out.push(next);
    }
    Ok(out)
}

/// `E_p(x)` by Horner's scheme on the coefficients `1/j!`.
fn taylor_poly<S: Scalar>(c: &[S], x: &S) -> S {
    let mut acc = c[c.len() - 1].clone();
    for cj in c.iter().rev().skip(1) {
        acc = acc * x + cj;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualBreakdown<S> {
    pub p: usize,
    /// Encloses `||R_p||_{L^2}`.
    pub rp_l2: S,
    /// Upper bound on `||T_p||_{L^2}`.
    pub tp_l2: S,
    /// Upper bound on `||F(u0)||_{L^2}`.
    pub total: S,
}

/// Gauss points integrating `R_p^2` exactly.
pub fn residual_points(degree: usize, k_degree: usize, p: usize) -> usize {
    p * degree + k_degree + 1
}

/// Certified `||F(u0)||_{L^2} <= ||R_p|| + ||T_p||`. `u0_sup` and `k_l2`
/// must be upper bounds for `sup |u0|` and `||K||_{L^2}`.
pub fn residual_bound<S: Enclosure>(
    u0: &CoeffFunction<S>,
    k: &CoeffFunction<S>,
    p: usize,
    u0_sup: &S,
    k_l2: &S,
) -> Result<ResidualBreakdown<S>, Error> {
    if p == 0 {
        return Err(Error::Config("Taylor degree p must be at least 1".into()));
    }
    let prec = u0.precision();
    let kpts = residual_points(u0.degree(), k.degree(), p);
    let grid = SphereGrid::<S>::gauss(u0.degree().max(k.degree()), kpts, prec)?;
    let lap = u0.laplacian();
    let coeffs = inverse_factorials::<S>(p, prec)?;
    let weights = grid.weights().expect("Gauss grid has weights");
    let nphi = grid.nphi();
    let one = S::one(prec);
    let parts = grid.map_rows(&[u0, &lap, k], |rows, vals| {
        let mut acc = S::zero(prec);
        for (t, i) in rows.enumerate() {
            let mut row = S::zero(prec);
            for q in t * nphi..(t + 1) * nphi {
                let e = taylor_poly(&coeffs, &vals[0][q].mul_f64(2.0));
                let r = one.clone() + &vals[1][q] - vals[2][q].clone() * &e;
                row += &r.sqr();
            }
            acc.mul_add_assign(&row, &weights[i]);
        }
        acc
    });
    let mut sq = S::zero(prec);
    for x in &parts {
        sq += x;
    }
    let rp_l2 = sq.max(&S::zero(prec)).try_sqrt()?;
    let tp_l2 = (k_l2.clone() * taylor_tail(&u0_sup.mul_f64(2.0), p)?).upper();
    let total = (rp_l2.clone() + &tp_l2).upper();
    Ok(ResidualBreakdown { p, rp_l2, tp_l2, total })
}

/// `||V||_∞ <= 2 K̄ e^{2ū}`.
pub fn v_sup_bound<S: Enclosure>(k_sup: &S, u0_sup: &S) -> S {
    k_sup.mul_f64(2.0) * u0_sup.mul_f64(2.0).exp()
}

/// Default Lipschitz sample grid for `sup |u0|`: spacing about `1/(16 N)`
/// so the gradient correction stays a few percent of the maximum.
pub fn sup_samples(degree: usize) -> Samples {
    let n = degree.max(4);
    Samples::new(48 * n, 96 * n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemBounds<S> {
    pub k_sup: S,
    pub k_l2: S,
    pub u0_sup: S,
    pub v_sup: S,
    pub residual: ResidualBreakdown<S>,
    pub c_emb: S,
}

fn is_y32<S: Enclosure>(k: &CoeffFunction<S>) -> bool {
    let y = crate::harmonics::index(3, 2);
    k.degree() == 3
        && k.coeffs()
            .iter()
            .enumerate()
            .all(|(i, c)| c.width() == 0.0 && c.contains_f64(if i == y { 1.0 } else { 0.0 }))
}

/// `sup |K|`: closed form for `Y_32`, Lipschitz bound otherwise.
pub fn k_sup_for<S: Enclosure>(k: &CoeffFunction<S>, samples: Samples) -> Result<S, Error> {
    if is_y32(k) {
        Ok(k_sup_bound::<S>(k.precision())?.upper())
    } else {
        Ok(k.sup_norm_bound(samples.ntheta, samples.nphi)?)
    }
}

/// All bounds of the residual stage.
pub fn problem_bounds<S: Enclosure>(
    u0: &CoeffFunction<S>,
    k: &CoeffFunction<S>,
    p: usize,
    samples: Samples,
) -> Result<ProblemBounds<S>, Error> {
    let prec = u0.precision();
    let k_sup = k_sup_for(k, samples)?;
    let k_l2 = if is_y32(k) { k_l2_norm::<S>(prec) } else { k.l2_norm().upper() };
    let u0_sup = u0.sup_norm_bound(samples.ntheta, samples.nphi)?;
    let v_sup = v_sup_bound(&k_sup, &u0_sup);
    let residual = residual_bound(u0, k, p, &u0_sup, &k_l2)?;
    let c_emb = embedding_constant::<S>(prec)?;
    Ok(ProblemBounds { k_sup, k_l2, u0_sup, v_sup, residual, c_emb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigor::Interval;

    fn p53() -> Precision {
        Precision::DOUBLE
    }

    #[test]
    fn curvature_norms() {
        let p = Precision::new(256).unwrap();
        let k: BigInterval = k_sup_bound(p).unwrap();
        assert!(k.contains_f64(0.5562984315) || k.overlaps(&BigInterval::from_bounds(0.55629843145, 0.55629843155, p)));
        assert!(k.width() < 1e-20);
        let c: Interval = cubic_max(p53()).unwrap();
        assert!((c.mid() - 0.3849002).abs() < 1e-7);
        let loose = k_sup_bound::<Interval>(p53()).unwrap() * Interval::pi(p53()).try_sqrt().unwrap().mul_f64(2.0);
        assert!((loose.mid() - 1.972).abs() < 1e-3 && loose.lo() >= 1.0);
        let grid = SphereGrid::<Interval>::gauss(3, 4, p53()).unwrap();
        let vals = grid.synthesize(&prescribed_curvature(p53()));
        let sq: Vec<Interval> = vals.iter().map(|v| v.sqr()).collect();
        assert!(grid.integrate(&sq).contains_f64(1.0));
    }

    #[test]
    fn embedding_series() {
        let c20: Interval = sobolev_series_constant(EMBEDDING_TERMS, p53()).unwrap();
        let bp = Precision::new(128).unwrap();
        let pi2 = BigInterval::pi(bp) * BigInterval::from_i64(2, bp);
        let closed = (BigInterval::zeta(3, bp) * BigInterval::from_i64(7, bp)).try_div(&pi2).unwrap().try_sqrt().unwrap();
        assert!(c20.overlaps(&Interval::from_big(&closed)));
        let small: Interval = sobolev_series_constant(1000, p53()).unwrap();
        assert!(small.contains(&c20) || small.overlaps(&c20));
        let emb: Interval = embedding_constant(p53()).unwrap();
        assert!(emb.contains_f64(1.1890517449) || (emb.mid() - 1.1890517449).abs() < 1e-10);
        assert!(emb.width() < 1e-9);
    }

    #[test]
    fn weight_inequality() {
        assert_eq!(embedding_weight_margin(2), 0);
        assert!((0..2000).all(|l| embedding_weight_margin(l) >= 0));
    }

    #[test]
    fn residual_of_zero() {
        let k = prescribed_curvature::<Interval>(p53());
        let u0 = CoeffFunction::zeros(4, p53());
        let zero = Interval::point(0.0);
        let r = residual_bound(&u0, &k, 3, &zero, &Interval::point(1.0)).unwrap();
        let want = (4.0 * std::f64::consts::PI + 1.0).sqrt();
        assert!(r.rp_l2.contains_f64(want) || (r.rp_l2.mid() - want).abs() < 1e-12);
        assert!(r.total.hi() >= want && r.total.hi() < want + 1e-10);
        assert!((r.total.mid() - 3.68326).abs() < 1e-5);
        assert!(matches!(residual_bound(&u0, &k, 0, &zero, &zero), Err(Error::Config(_))));
    }

    #[test]
    fn constant_curvature_has_zero_residual() {
        // K = 1 = 2√π Y_00 solves with u = 0.
        let mut k = CoeffFunction::<Interval>::zeros(0, p53());
        k.set(0, 0, Interval::pi(p53()).try_sqrt().unwrap().mul_f64(2.0));
        let u0 = CoeffFunction::zeros(3, p53());
        let r = residual_bound(&u0, &k, 2, &Interval::point(0.0), &k.l2_norm()).unwrap();
        assert!(r.total.hi() < 1e-12);
    }

    #[test]
    fn tail_decreases_with_p() {
        let x = Interval::point(3.15);
        let tails: Vec<f64> = (10..60).map(|p| taylor_tail(&x, p).unwrap().hi()).collect();
        assert!(tails.windows(2).all(|w| w[1] < w[0]));
        assert!(tails[30] < 1e-12);
        let mut u0 = CoeffFunction::<Interval>::zeros(3, p53());
        u0.set(3, 2, Interval::point(0.2));
        u0.set(0, 0, Interval::point(-0.1));
        let k = prescribed_curvature(p53());
        let sup = u0.sup_norm_bound(64, 128).unwrap();
        let one = Interval::point(1.0);
        let totals: Vec<Interval> =
            (2..12).step_by(2).map(|p| residual_bound(&u0, &k, p, &sup, &one).unwrap().total).collect();
        for w in totals.windows(2) {
            assert!(w[1].hi() <= w[0].hi() + 10.0 * w[0].width());
        }
    }

    #[test]
    fn potential_bound() {
        let ks = Interval::point(0.5562984315);
        assert!(v_sup_bound(&ks, &Interval::point(0.0)).contains_f64(2.0 * 0.5562984315));
        let w = |x: f64| Interval::new(x - 1e-10, x + 1e-10);
        let td = v_sup_bound(&w(0.5562984315), &w(1.5765413397));
        assert!(td.overlaps(&w(26.0437932936)));
        let s3 = v_sup_bound(&w(0.5562984315), &w(1.7834303808));
        assert!(s3.overlaps(&w(39.3917955859)));
        assert!(v_sup_bound(&ks, &Interval::point(1.6)).hi() > td.hi());
    }
}
