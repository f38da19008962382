//! Intervals with binary64 endpoints.
//!
//! Directed rounding is emulated in round-to-nearest mode: every primitive
//! computes the nearest result and an exact error term (TwoSum, FMA-based
//! TwoProduct, exact division and square-root remainders); the sign of the
//! error decides whether to step one ulp outward. Near the underflow
//! threshold the error terms stop being exact, so results there are simply
//! widened by one ulp.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use super::mpfr::{self, MpFloat, Round};
use super::{BigInterval, Enclosure, Precision, RigorError, Scalar};

/// Below this magnitude error-free transforms may lose their exactness.
const TINY: f64 = 1.0e-280;
/// Unit roundoff of binary64.
const U: f64 = f64::EPSILON / 2.0;
/// Smallest positive subnormal.
const ETA: f64 = 4.9406564584124654e-324;

fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() {
            f64::NEG_INFINITY
        } else if s == f64::INFINITY && a.is_finite() && b.is_finite() {
            f64::MAX
        } else {
            s
        };
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    -add_down(-a, -b)
}

fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if p.is_infinite() {
        return if a.is_finite() && b.is_finite() && p > 0.0 {
            f64::MAX
        } else {
            p
        };
    }
    if p.abs() < TINY {
        return p.next_down();
    }
    let err = a.mul_add(b, -p);
    if err < 0.0 {
        p.next_down()
    } else {
        p
    }
}

pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    -mul_down(-a, b)
}

fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_nan() {
        return f64::NEG_INFINITY;
    }
    if q.is_infinite() {
        return if a.is_finite() && q > 0.0 { f64::MAX } else { q };
    }
    if b.is_infinite() {
        return q;
    }
    if q.abs() < TINY || a.abs() < TINY || b.abs() > 1.0e280 || a.abs() > 1.0e300 {
        return q.next_down();
    }
    // a - q*b is exactly representable for the rounded quotient q.
    let r = (-q).mul_add(b, a);
    let sign = r * b.signum();
    if sign < 0.0 {
        q.next_down()
    } else {
        q
    }
}

fn div_up(a: f64, b: f64) -> f64 {
    -div_down(-a, b)
}

fn sqrt_down(a: f64) -> f64 {
    let r = a.sqrt();
    if r == 0.0 || r.is_infinite() {
        return r;
    }
    if a < TINY {
        return r.next_down().max(0.0);
    }
    let err = (-r).mul_add(r, a);
    if err < 0.0 {
        r.next_down()
    } else {
        r
    }
}

fn sqrt_up(a: f64) -> f64 {
    let r = a.sqrt();
    if r == 0.0 || r.is_infinite() {
        return r;
    }
    if a < TINY {
        return r.next_up();
    }
    let err = (-r).mul_add(r, a);
    if err > 0.0 {
        r.next_up()
    } else {
        r
    }
}

fn pow_down(x: f64, n: u32) -> f64 {
    // x >= 0, so directed products are monotone.
    let (mut base, mut e, mut acc) = (x, n, 1.0);
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_down(acc, base);
        }
        e >>= 1;
        if e > 0 {
            base = mul_down(base, base);
        }
    }
    acc
}

fn pow_up(x: f64, n: u32) -> f64 {
    let (mut base, mut e, mut acc) = (x, n, 1.0);
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_up(acc, base);
        }
        e >>= 1;
        if e > 0 {
            base = mul_up(base, base);
        }
    }
    acc
}

/// `k * u / (1 - k * u)` rounded up.
fn gamma(k: usize) -> f64 {
    let ku = mul_up(k as f64, U);
    div_up(ku, sub_down(1.0, ku))
}

/// Closed interval `[lo, hi]` with binary64 endpoints.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// `[lo, hi]`; panics on reversed or NaN endpoints.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval::new(x, x)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Midpoint and an upper bound on the radius.
    fn mid_rad(&self) -> (f64, f64) {
        if self.lo == self.hi {
            return (self.lo, 0.0);
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        let r = (self.hi - m).max(m - self.lo);
        (m, r.next_up())
    }

    pub fn cos(&self) -> Self {
        self.trig(false)
    }

    pub fn sin(&self) -> Self {
        self.trig(true)
    }

    fn trig(&self, is_sin: bool) -> Self {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Interval::new(-1.0, 1.0);
        }
        let lo = MpFloat::from_f64(self.lo, 53, Round::Nearest);
        let hi = MpFloat::from_f64(self.hi, 53, Round::Nearest);
        let (a, b) = mpfr::trig_range(&lo, &hi, 53, is_sin);
        Interval::new(a.to_f64(Round::Down), b.to_f64(Round::Up))
    }

    fn mpfr_monotone(&self, f: impl Fn(&MpFloat, Round) -> MpFloat) -> Self {
        let lo = MpFloat::from_f64(self.lo, 53, Round::Nearest);
        let hi = MpFloat::from_f64(self.hi, 53, Round::Nearest);
        Interval::new(f(&lo, Round::Down).to_f64(Round::Down), f(&hi, Round::Up).to_f64(Round::Up))
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, o.lo),
            hi: add_up(self.hi, o.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval {
            lo: sub_down(self.lo, o.hi),
            hi: sub_up(self.hi, o.lo),
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, b: Interval) -> Interval {
        let a = self;
        let (lo, hi) = if a.lo >= 0.0 {
            if b.lo >= 0.0 {
                (mul_down(a.lo, b.lo), mul_up(a.hi, b.hi))
            } else if b.hi <= 0.0 {
                (mul_down(a.hi, b.lo), mul_up(a.lo, b.hi))
            } else {
                (mul_down(a.hi, b.lo), mul_up(a.hi, b.hi))
            }
        } else if a.hi <= 0.0 {
            if b.lo >= 0.0 {
                (mul_down(a.lo, b.hi), mul_up(a.hi, b.lo))
            } else if b.hi <= 0.0 {
                (mul_down(a.hi, b.hi), mul_up(a.lo, b.lo))
            } else {
                (mul_down(a.lo, b.hi), mul_up(a.lo, b.lo))
            }
        } else if b.lo >= 0.0 {
            (mul_down(a.lo, b.hi), mul_up(a.hi, b.hi))
        } else if b.hi <= 0.0 {
            (mul_down(a.hi, b.lo), mul_up(a.lo, b.lo))
        } else {
            (
                mul_down(a.lo, b.hi).min(mul_down(a.hi, b.lo)),
                mul_up(a.lo, b.lo).max(mul_up(a.hi, b.hi)),
            )
        };
        Interval { lo, hi }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

macro_rules! ref_ops {
    ($($tr:ident $m:ident $atr:ident $am:ident),*) => {$(
        impl<'a> $tr<&'a Interval> for Interval {
            type Output = Interval;
            fn $m(self, o: &'a Interval) -> Interval {
                $tr::$m(self, *o)
            }
        }
        impl<'a> $atr<&'a Interval> for Interval {
            fn $am(&mut self, o: &'a Interval) {
                *self = $tr::$m(*self, *o);
            }
        }
        impl $atr for Interval {
            fn $am(&mut self, o: Interval) {
                *self = $tr::$m(*self, o);
            }
        }
    )*};
}

ref_ops!(Add add AddAssign add_assign, Sub sub SubAssign sub_assign, Mul mul MulAssign mul_assign);

impl Scalar for Interval {
    fn from_f64(x: f64, _prec: Precision) -> Self {
        Interval::point(x)
    }

    fn from_i64(n: i64, _prec: Precision) -> Self {
        let x = n as f64;
        if x.abs() <= 9007199254740992.0 {
            Interval::point(x)
        } else {
            Interval::new(x.next_down(), x.next_up())
        }
    }

    fn from_big(x: &BigInterval) -> Self {
        Interval::new(x.lo.to_f64(Round::Down), x.hi.to_f64(Round::Up))
    }

    fn precision(&self) -> Precision {
        Precision::DOUBLE
    }

    fn mid(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => self.mid_rad().0,
            (false, true) => self.hi,
            (true, false) => self.lo,
            (false, false) => 0.0,
        }
    }

    fn sqr(&self) -> Self {
        let (mig, mag) = (self.mig(), self.mag());
        Interval::new(mul_down(mig, mig), mul_up(mag, mag))
    }

    fn abs(&self) -> Self {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval::new(0.0, (-self.lo).max(self.hi))
        }
    }

    fn max(&self, o: &Self) -> Self {
        Interval::new(self.lo.max(o.lo), self.hi.max(o.hi))
    }

    fn min(&self, o: &Self) -> Self {
        Interval::new(self.lo.min(o.lo), self.hi.min(o.hi))
    }

    fn powi(&self, n: u32) -> Self {
        if n == 0 {
            return Interval::point(1.0);
        }
        if n % 2 == 0 {
            Interval::new(pow_down(self.mig(), n), pow_up(self.mag(), n))
        } else {
            let down = |x: f64| if x >= 0.0 { pow_down(x, n) } else { -pow_up(-x, n) };
            let up = |x: f64| if x >= 0.0 { pow_up(x, n) } else { -pow_down(-x, n) };
            Interval::new(down(self.lo), up(self.hi))
        }
    }

    fn exp(&self) -> Self {
        self.mpfr_monotone(|x, r| x.exp(53, r))
    }

    fn try_div(&self, b: &Self) -> Result<Self, RigorError> {
        let a = self;
        if b.lo <= 0.0 && b.hi >= 0.0 {
            return Err(RigorError::DivisionByZero);
        }
        let (lo, hi) = if b.lo > 0.0 {
            if a.lo >= 0.0 {
                (div_down(a.lo, b.hi), div_up(a.hi, b.lo))
            } else if a.hi <= 0.0 {
                (div_down(a.lo, b.lo), div_up(a.hi, b.hi))
            } else {
                (div_down(a.lo, b.lo), div_up(a.hi, b.lo))
            }
        } else if a.lo >= 0.0 {
            (div_down(a.hi, b.hi), div_up(a.lo, b.lo))
        } else if a.hi <= 0.0 {
            (div_down(a.hi, b.lo), div_up(a.lo, b.hi))
        } else {
            (div_down(a.hi, b.hi), div_up(a.lo, b.hi))
        };
        Ok(Interval { lo, hi })
    }

    fn try_sqrt(&self) -> Result<Self, RigorError> {
        if self.lo < 0.0 {
            return Err(RigorError::SqrtOfNegative);
        }
        Ok(Interval::new(sqrt_down(self.lo), sqrt_up(self.hi)))
    }

    fn try_ln(&self) -> Result<Self, RigorError> {
        if self.lo <= 0.0 {
            return Err(RigorError::LogOfNonPositive);
        }
        Ok(self.mpfr_monotone(|x, r| x.ln(53, r)))
    }

    fn pi(_prec: Precision) -> Self {
        Interval::new(
            MpFloat::pi(53, Round::Down).to_f64(Round::Down),
            MpFloat::pi(53, Round::Up).to_f64(Round::Up),
        )
    }

    fn mul_f64(&self, c: f64) -> Self {
        *self * Interval::point(c)
    }

    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        *self = *self + *a * *b;
    }

    /// Midpoint-radius dot product: one floating sum of midpoint products
    /// plus an a-priori bound on its rounding error and on the radii.
    fn dot(a: &[Self], b: &[Self], prec: Precision) -> Self {
        let n = a.len();
        if n == 0 {
            return Interval::point(0.0);
        }
        let (mut s, mut t, mut r) = (0.0f64, 0.0f64, 0.0f64);
        for (x, y) in a.iter().zip(b) {
            let (mx, rx) = x.mid_rad();
            let (my, ry) = y.mid_rad();
            s += mx * my;
            t += (mx * my).abs();
            r += mx.abs() * ry + rx * (my.abs() + ry);
        }
        if !(s.is_finite() && t.is_finite() && r.is_finite()) {
            return super::generic_dot(a, b, prec);
        }
        enclose_sum(s, t, r, n)
    }

    fn matmul(a: &[Self], b: &[Self], m: usize, k: usize, n: usize, prec: Precision) -> Vec<Self> {
        if m * n * k < 4096 || !a.iter().chain(b).all(|x| x.is_finite()) {
            return super::generic_matmul(a, b, m, k, n, prec);
        }
        use nalgebra::DMatrix;
        let split = |v: &[Interval], rows: usize, cols: usize| {
            let mut mid = DMatrix::<f64>::zeros(rows, cols);
            let mut rad = DMatrix::<f64>::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    let (mm, rr) = v[i * cols + j].mid_rad();
                    mid[(i, j)] = mm;
                    rad[(i, j)] = rr;
                }
            }
            (mid, rad)
        };
        let (ma, ra) = split(a, m, k);
        let (mb, rb) = split(b, k, n);
        let p1 = &ma * &mb;
        let ama = ma.abs();
        let amb = mb.abs();
        let p2 = &ama * &amb;
        // [|mA| rA] * [rB; |mB| + rB] in a single product of inner size 2k.
        let mut left = DMatrix::<f64>::zeros(m, 2 * k);
        left.columns_mut(0, k).copy_from(&ama);
        left.columns_mut(k, k).copy_from(&ra);
        let mut right = DMatrix::<f64>::zeros(2 * k, n);
        right.rows_mut(0, k).copy_from(&rb);
        for i in 0..k {
            for j in 0..n {
                right[(k + i, j)] = add_up(amb[(i, j)], rb[(i, j)]);
            }
        }
        let p3 = &left * &right;
        let g = gamma(2 * k + 2);
        let inv = div_up(1.0, sub_down(1.0, g));
        let kh = mul_up(k as f64, ETA);
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                let rad = add_up(
                    mul_up(
                        add_up(mul_up(g, add_up(p2[(i, j)], kh)), add_up(p3[(i, j)], 2.0 * kh)),
                        inv,
                    ),
                    kh,
                );
                let c = p1[(i, j)];
                if !(c.is_finite() && rad.is_finite()) {
                    out.push(Interval::ENTIRE);
                } else {
                    out.push(Interval::new(sub_down(c, rad), add_up(c, rad)));
                }
            }
        }
        out
    }
}

/// Encloses an exact dot product from its floating midpoint sum `s`, the
/// floating sum `t` of absolute midpoint products and the floating radius
/// sum `r`, each accumulated over `n` terms in round-to-nearest.
fn enclose_sum(s: f64, t: f64, r: f64, n: usize) -> Interval {
    // Exact radius sum <= (r + 2n eta) / (1 - gamma_{2n+2}); rounding error of
    // s is <= gamma_n * exact(t) + n eta, with exact(t) <= (t + n eta) / (1 - gamma_n).
    let g = gamma(2 * n + 2);
    let inv = div_up(1.0, sub_down(1.0, g));
    let nh = mul_up(n as f64, ETA);
    let rad = add_up(
        mul_up(add_up(mul_up(g, add_up(t, nh)), add_up(r, 2.0 * nh)), inv),
        nh,
    );
    if !rad.is_finite() {
        return Interval::ENTIRE;
    }
    Interval::new(sub_down(s, rad), add_up(s, rad))
}

impl Enclosure for Interval {
    fn from_bounds(lo: f64, hi: f64, _prec: Precision) -> Self {
        Interval::new(lo, hi)
    }

    fn entire(_prec: Precision) -> Self {
        Interval::ENTIRE
    }

    fn lo_f64(&self) -> f64 {
        self.lo
    }

    fn hi_f64(&self) -> f64 {
        self.hi
    }

    fn to_big(&self) -> BigInterval {
        BigInterval::new(
            MpFloat::from_f64(self.lo, 53, Round::Nearest),
            MpFloat::from_f64(self.hi, 53, Round::Nearest),
        )
    }

    fn contains(&self, o: &Self) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    fn overlaps(&self, o: &Self) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    fn hull(&self, o: &Self) -> Self {
        Interval::new(self.lo.min(o.lo), self.hi.max(o.hi))
    }

    fn upper(&self) -> Self {
        Interval::point(self.hi)
    }

    fn lower(&self) -> Self {
        Interval::point(self.lo)
    }

    fn lo_decimal(&self) -> String {
        exact_decimal(self.lo)
    }

    fn hi_decimal(&self) -> String {
        exact_decimal(self.hi)
    }

    fn from_decimal(lo: &str, hi: &str, _prec: Precision) -> Result<Self, RigorError> {
        let b = BigInterval::from_decimal(lo, hi, Precision::DOUBLE)?;
        Ok(Interval::from_big(&b))
    }

    fn width(&self) -> f64 {
        sub_up(self.hi, self.lo)
    }
}

/// Exact decimal expansion of a binary64 value, so that endpoints survive a
/// write/read cycle bit for bit.
pub(crate) fn exact_decimal(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // 770 significant digits represent every binary64 value exactly.
    MpFloat::from_f64(x, 53, Round::Nearest).to_decimal(770, Round::Nearest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn exact_integer_addition() {
        assert_eq!(iv(1.0, 1.0) + iv(2.0, 2.0), iv(3.0, 3.0));
    }

    #[test]
    fn endpoint_products() {
        assert_eq!(iv(-1.0, 2.0) * iv(3.0, 4.0), iv(-4.0, 8.0));
    }

    #[test]
    fn exp_of_zero() {
        let e = iv(0.0, 0.0).exp();
        assert!(e.contains_f64(1.0));
        assert!(e.width() <= 2f64.powi(-50));
    }

    #[test]
    fn inexact_sum_is_widened() {
        let s = iv(0.1, 0.1) + iv(0.2, 0.2);
        assert!(s.lo() < s.hi());
        assert!(s.contains_f64(0.30000000000000004) || s.contains_f64(0.3));
    }

    #[test]
    fn domain_errors() {
        assert_eq!(iv(1.0, 2.0).try_div(&iv(-1.0, 1.0)), Err(RigorError::DivisionByZero));
        assert_eq!(iv(-1.0, 2.0).try_sqrt(), Err(RigorError::SqrtOfNegative));
        assert_eq!(iv(0.0, 2.0).try_ln(), Err(RigorError::LogOfNonPositive));
    }

    #[test]
    fn sqrt_two() {
        let r = iv(2.0, 2.0).try_sqrt().unwrap();
        assert!(r.lo() < r.hi());
        assert_eq!(r.hi().next_down(), r.lo());
        let sq = r * r;
        assert!(sq.contains_f64(2.0));
    }

    #[test]
    fn division_thirds() {
        let q = iv(1.0, 1.0).try_div(&iv(3.0, 3.0)).unwrap();
        assert!(q.lo() < q.hi() && q.lo() <= 1.0 / 3.0 && 1.0 / 3.0 <= q.hi());
        let e = iv(6.0, 6.0).try_div(&iv(3.0, 3.0)).unwrap();
        assert_eq!(e, iv(2.0, 2.0));
    }

    #[test]
    fn even_power_straddling_zero() {
        assert_eq!(iv(-2.0, 1.0).powi(2), iv(0.0, 4.0));
        assert_eq!(iv(-2.0, 1.0).powi(3), iv(-8.0, 1.0));
    }

    #[test]
    fn cos_sin_enclosures() {
        let c = iv(3.0, 3.3).cos();
        assert!(c.contains_f64(-1.0));
        let s = iv(1.0, 1.0).sin();
        assert!(s.contains_f64(1f64.sin()));
    }

    #[test]
    fn dot_and_matmul_contain_exact() {
        let a: Vec<Interval> = (0..50).map(|i| iv(i as f64 * 0.1, i as f64 * 0.1 + 1e-9)).collect();
        let b: Vec<Interval> = (0..50).map(|i| iv(1.0 / (i + 1) as f64, 1.0 / (i + 1) as f64)).collect();
        let d = Interval::dot(&a, &b, Precision::DOUBLE);
        let g = super::super::generic_dot(&a, &b, Precision::DOUBLE);
        assert!(d.overlaps(&g));
        assert!(d.width() < 1e-6);
        let m = Interval::matmul(&a[..50], &b[..50], 5, 10, 5, Precision::DOUBLE);
        let gm = super::super::generic_matmul(&a[..50], &b[..50], 5, 10, 5, Precision::DOUBLE);
        for (x, y) in m.iter().zip(&gm) {
            assert!(x.overlaps(y));
        }
    }

    #[test]
    fn exact_decimal_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 5e-324, 123456.789] {
            let s = exact_decimal(x);
            let back = Interval::from_decimal(&s, &s, Precision::DOUBLE).unwrap();
            assert_eq!(back, Interval::point(x));
        }
    }
}
