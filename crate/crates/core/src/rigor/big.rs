//! Intervals with MPFR endpoints at arbitrary precision.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use super::mpfr::{trig_range, MpFloat, Round};
use super::{Enclosure, Precision, RigorError, Scalar};

#[derive(Clone)]
pub struct BigInterval {
    pub lo: MpFloat,
    pub hi: MpFloat,
}

fn mul_dir(a: &MpFloat, b: &MpFloat, p: u32, rnd: Round) -> MpFloat {
    if a.is_zero() || b.is_zero() {
        MpFloat::new(p)
    } else {
        a.mul(b, p, rnd)
    }
}

fn div_dir(a: &MpFloat, b: &MpFloat, p: u32, rnd: Round) -> MpFloat {
    if a.is_zero() {
        MpFloat::new(p)
    } else {
        a.div(b, p, rnd)
    }
}

fn min_mp(a: MpFloat, b: MpFloat) -> MpFloat {
    if a.cmp_value(&b).is_le() {
        a
    } else {
        b
    }
}

fn max_mp(a: MpFloat, b: MpFloat) -> MpFloat {
    if a.cmp_value(&b).is_ge() {
        a
    } else {
        b
    }
}

fn pow_dir(x: &MpFloat, n: u32, p: u32, rnd: Round) -> MpFloat {
    // x >= 0: directed products are monotone.
    let mut acc = MpFloat::from_i64(1, p, Round::Nearest);
    let mut base = x.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_dir(&acc, &base, p, rnd);
        }
        e >>= 1;
        if e > 0 {
            base = mul_dir(&base, &base, p, rnd);
        }
    }
    acc
}

impl BigInterval {
    /// `[lo, hi]`; panics on reversed or NaN endpoints.
    pub fn new(lo: MpFloat, hi: MpFloat) -> Self {
        assert!(
            !lo.is_nan() && !hi.is_nan() && lo.cmp_value(&hi).is_le(),
            "invalid interval [{lo:?}, {hi:?}]"
        );
        BigInterval { lo, hi }
    }

    fn bits(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    fn op_prec(&self, o: &Self) -> u32 {
        self.bits().max(o.bits())
    }

    /// Same enclosure rounded outward to `prec` bits.
    pub fn round_to(&self, prec: Precision) -> Self {
        let p = prec.bits();
        BigInterval::new(self.lo.round_to(p, Round::Down), self.hi.round_to(p, Round::Up))
    }

    pub fn cos(&self) -> Self {
        let (a, b) = trig_range(&self.lo, &self.hi, self.bits(), false);
        BigInterval::new(a, b)
    }

    pub fn sin(&self) -> Self {
        let (a, b) = trig_range(&self.lo, &self.hi, self.bits(), true);
        BigInterval::new(a, b)
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        let v = MpFloat::from_f64(x, 53, Round::Nearest);
        self.lo.cmp_value(&v).is_le() && v.cmp_value(&self.hi).is_le()
    }

    pub fn overlaps(&self, o: &Self) -> bool {
        self.lo.cmp_value(&o.hi).is_le() && o.lo.cmp_value(&self.hi).is_le()
    }

    /// `zeta(n)` for integer `n >= 2`.
    pub fn zeta(n: u64, prec: Precision) -> Self {
        let p = prec.bits();
        BigInterval::new(MpFloat::zeta(n, p, Round::Down), MpFloat::zeta(n, p, Round::Up))
    }

    fn monotone(&self, f: impl Fn(&MpFloat, u32, Round) -> MpFloat) -> Self {
        let p = self.bits();
        BigInterval::new(f(&self.lo, p, Round::Down), f(&self.hi, p, Round::Up))
    }
}

impl PartialEq for BigInterval {
    fn eq(&self, o: &Self) -> bool {
        self.lo.cmp_value(&o.lo).is_eq() && self.hi.cmp_value(&o.hi).is_eq()
    }
}

impl fmt::Debug for BigInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            self.lo.to_decimal(20, Round::Down),
            self.hi.to_decimal(20, Round::Up)
        )
    }
}

impl Add for BigInterval {
    type Output = BigInterval;
    fn add(self, o: BigInterval) -> BigInterval {
        &self + &o
    }
}

impl<'a> Add<&'a BigInterval> for &'a BigInterval {
    type Output = BigInterval;
    fn add(self, o: &'a BigInterval) -> BigInterval {
        let p = self.op_prec(o);
        BigInterval {
            lo: self.lo.add(&o.lo, p, Round::Down),
            hi: self.hi.add(&o.hi, p, Round::Up),
        }
    }
}

impl<'a> Sub<&'a BigInterval> for &'a BigInterval {
    type Output = BigInterval;
    fn sub(self, o: &'a BigInterval) -> BigInterval {
        let p = self.op_prec(o);
        BigInterval {
            lo: self.lo.sub(&o.hi, p, Round::Down),
            hi: self.hi.sub(&o.lo, p, Round::Up),
        }
    }
}

impl<'a> Mul<&'a BigInterval> for &'a BigInterval {
    type Output = BigInterval;
    fn mul(self, b: &'a BigInterval) -> BigInterval {
        let a = self;
        let p = a.op_prec(b);
        let (d, u) = (Round::Down, Round::Up);
        let a_nonneg = a.lo.signum() >= 0;
        let a_nonpos = a.hi.signum() <= 0;
        let b_nonneg = b.lo.signum() >= 0;
        let b_nonpos = b.hi.signum() <= 0;
        let (lo, hi) = if a_nonneg {
            if b_nonneg {
                (mul_dir(&a.lo, &b.lo, p, d), mul_dir(&a.hi, &b.hi, p, u))
            } else if b_nonpos {
                (mul_dir(&a.hi, &b.lo, p, d), mul_dir(&a.lo, &b.hi, p, u))
            } else {
                (mul_dir(&a.hi, &b.lo, p, d), mul_dir(&a.hi, &b.hi, p, u))
            }
        } else if a_nonpos {
            if b_nonneg {
                (mul_dir(&a.lo, &b.hi, p, d), mul_dir(&a.hi, &b.lo, p, u))
            } else if b_nonpos {
                (mul_dir(&a.hi, &b.hi, p, d), mul_dir(&a.lo, &b.lo, p, u))
            } else {
                (mul_dir(&a.lo, &b.hi, p, d), mul_dir(&a.lo, &b.lo, p, u))
            }
        } else if b_nonneg {
            (mul_dir(&a.lo, &b.hi, p, d), mul_dir(&a.hi, &b.hi, p, u))
        } else if b_nonpos {
            (mul_dir(&a.hi, &b.lo, p, d), mul_dir(&a.lo, &b.lo, p, u))
        } else {
            (
                min_mp(mul_dir(&a.lo, &b.hi, p, d), mul_dir(&a.hi, &b.lo, p, d)),
                max_mp(mul_dir(&a.lo, &b.lo, p, u), mul_dir(&a.hi, &b.hi, p, u)),
            )
        };
        BigInterval { lo, hi }
    }
}

impl Neg for BigInterval {
    type Output = BigInterval;
    fn neg(self) -> BigInterval {
        let p = self.bits();
        BigInterval {
            lo: self.hi.neg(p, Round::Down),
            hi: self.lo.neg(p, Round::Up),
        }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident $atr:ident $am:ident),*) => {$(
        impl<'a> $tr<&'a BigInterval> for BigInterval {
            type Output = BigInterval;
            fn $m(self, o: &'a BigInterval) -> BigInterval {
                $tr::$m(&self, o)
            }
        }
        impl<'a> $atr<&'a BigInterval> for BigInterval {
            fn $am(&mut self, o: &'a BigInterval) {
                *self = $tr::$m(&*self, o);
            }
        }
    )*};
}

owned_ops!(Sub sub SubAssign sub_assign, Mul mul MulAssign mul_assign);

impl<'a> Add<&'a BigInterval> for BigInterval {
    type Output = BigInterval;
    fn add(self, o: &'a BigInterval) -> BigInterval {
        &self + o
    }
}

impl<'a> AddAssign<&'a BigInterval> for BigInterval {
    fn add_assign(&mut self, o: &'a BigInterval) {
        *self = &*self + o;
    }
}

impl Sub for BigInterval {
    type Output = BigInterval;
    fn sub(self, o: BigInterval) -> BigInterval {
        &self - &o
    }
}

impl Mul for BigInterval {
    type Output = BigInterval;
    fn mul(self, o: BigInterval) -> BigInterval {
        &self * &o
    }
}

impl Scalar for BigInterval {
    fn from_f64(x: f64, prec: Precision) -> Self {
        let p = prec.bits();
        BigInterval::new(MpFloat::from_f64(x, p, Round::Down), MpFloat::from_f64(x, p, Round::Up))
    }

    fn from_i64(n: i64, prec: Precision) -> Self {
        let p = prec.bits();
        BigInterval::new(MpFloat::from_i64(n, p, Round::Down), MpFloat::from_i64(n, p, Round::Up))
    }

    fn from_big(x: &BigInterval) -> Self {
        x.clone()
    }

    fn precision(&self) -> Precision {
        Precision(self.bits())
    }

    fn mid(&self) -> f64 {
        let lo = self.lo.to_f64(Round::Nearest);
        let hi = self.hi.to_f64(Round::Nearest);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * lo + 0.5 * hi,
            (false, true) => hi,
            (true, false) => lo,
            (false, false) => 0.0,
        }
    }

    fn sqr(&self) -> Self {
        let a = self.abs();
        let p = self.bits();
        BigInterval::new(mul_dir(&a.lo, &a.lo, p, Round::Down), mul_dir(&a.hi, &a.hi, p, Round::Up))
    }

    fn abs(&self) -> Self {
        let p = self.bits();
        if self.lo.signum() >= 0 {
            self.clone()
        } else if self.hi.signum() <= 0 {
            -self.clone()
        } else {
            let nl = self.lo.neg(p, Round::Up);
            BigInterval::new(MpFloat::new(p), max_mp(nl, self.hi.clone()))
        }
    }

    fn max(&self, o: &Self) -> Self {
        BigInterval::new(max_mp(self.lo.clone(), o.lo.clone()), max_mp(self.hi.clone(), o.hi.clone()))
    }

    fn min(&self, o: &Self) -> Self {
        BigInterval::new(min_mp(self.lo.clone(), o.lo.clone()), min_mp(self.hi.clone(), o.hi.clone()))
    }

    fn powi(&self, n: u32) -> Self {
        let p = self.bits();
        if n == 0 {
            return BigInterval::one(self.precision());
        }
        let signed = |x: &MpFloat, rnd: Round| {
            if x.signum() >= 0 {
                pow_dir(x, n, p, rnd)
            } else {
                let opp = if rnd == Round::Down { Round::Up } else { Round::Down };
                pow_dir(&x.neg(p, Round::Nearest), n, p, opp).neg(p, Round::Nearest)
            }
        };
        if n % 2 == 0 {
            let a = self.abs();
            BigInterval::new(pow_dir(&a.lo, n, p, Round::Down), pow_dir(&a.hi, n, p, Round::Up))
        } else {
            BigInterval::new(signed(&self.lo, Round::Down), signed(&self.hi, Round::Up))
        }
    }

    fn exp(&self) -> Self {
        self.monotone(|x, p, r| x.exp(p, r))
    }

    fn try_div(&self, b: &Self) -> Result<Self, RigorError> {
        let a = self;
        if b.lo.signum() <= 0 && b.hi.signum() >= 0 {
            return Err(RigorError::DivisionByZero);
        }
        let p = a.op_prec(b);
        let (d, u) = (Round::Down, Round::Up);
        let a_nonneg = a.lo.signum() >= 0;
        let a_nonpos = a.hi.signum() <= 0;
        let (lo, hi) = if b.lo.signum() > 0 {
            if a_nonneg {
                (div_dir(&a.lo, &b.hi, p, d), div_dir(&a.hi, &b.lo, p, u))
            } else if a_nonpos {
                (div_dir(&a.lo, &b.lo, p, d), div_dir(&a.hi, &b.hi, p, u))
            } else {
                (div_dir(&a.lo, &b.lo, p, d), div_dir(&a.hi, &b.lo, p, u))
            }
        } else if a_nonneg {
            (div_dir(&a.hi, &b.hi, p, d), div_dir(&a.lo, &b.lo, p, u))
        } else if a_nonpos {
            (div_dir(&a.hi, &b.lo, p, d), div_dir(&a.lo, &b.hi, p, u))
        } else {
            (div_dir(&a.hi, &b.hi, p, d), div_dir(&a.lo, &b.hi, p, u))
        };
        Ok(BigInterval::new(lo, hi))
    }

    fn try_sqrt(&self) -> Result<Self, RigorError> {
        if self.lo.signum() < 0 {
            return Err(RigorError::SqrtOfNegative);
        }
        Ok(self.monotone(|x, p, r| x.sqrt(p, r)))
    }

    fn try_ln(&self) -> Result<Self, RigorError> {
        if self.lo.signum() <= 0 {
            return Err(RigorError::LogOfNonPositive);
        }
        Ok(self.monotone(|x, p, r| x.ln(p, r)))
    }

    fn pi(prec: Precision) -> Self {
        let p = prec.bits();
        BigInterval::new(MpFloat::pi(p, Round::Down), MpFloat::pi(p, Round::Up))
    }
}

impl Enclosure for BigInterval {
    fn from_bounds(lo: f64, hi: f64, prec: Precision) -> Self {
        let p = prec.bits();
        BigInterval::new(MpFloat::from_f64(lo, p, Round::Down), MpFloat::from_f64(hi, p, Round::Up))
    }

    fn entire(prec: Precision) -> Self {
        let p = prec.bits();
        BigInterval::new(MpFloat::infinity(p, false), MpFloat::infinity(p, true))
    }

    fn lo_f64(&self) -> f64 {
        self.lo.to_f64(Round::Down)
    }

    fn hi_f64(&self) -> f64 {
        self.hi.to_f64(Round::Up)
    }

    fn to_big(&self) -> BigInterval {
        self.clone()
    }

    fn contains(&self, o: &Self) -> bool {
        self.lo.cmp_value(&o.lo).is_le() && o.hi.cmp_value(&self.hi).is_le()
    }

    fn overlaps(&self, o: &Self) -> bool {
        BigInterval::overlaps(self, o)
    }

    fn hull(&self, o: &Self) -> Self {
        BigInterval::new(min_mp(self.lo.clone(), o.lo.clone()), max_mp(self.hi.clone(), o.hi.clone()))
    }

    fn upper(&self) -> Self {
        BigInterval::new(self.hi.clone(), self.hi.clone())
    }

    fn lower(&self) -> Self {
        BigInterval::new(self.lo.clone(), self.lo.clone())
    }

    fn lo_decimal(&self) -> String {
        self.lo.to_decimal(decimal_digits(self.bits()), Round::Down)
    }

    fn hi_decimal(&self) -> String {
        self.hi.to_decimal(decimal_digits(self.bits()), Round::Up)
    }

    fn from_decimal(lo: &str, hi: &str, prec: Precision) -> Result<Self, RigorError> {
        let p = prec.bits();
        let parse = |s: &str, r: Round| -> Result<MpFloat, RigorError> {
            match s.trim() {
                "inf" | "+inf" => Ok(MpFloat::infinity(p, true)),
                "-inf" => Ok(MpFloat::infinity(p, false)),
                t => MpFloat::parse(t, p, r).ok_or_else(|| RigorError::Parse(s.to_string())),
            }
        };
        let (l, h) = (parse(lo, Round::Down)?, parse(hi, Round::Up)?);
        if l.cmp_value(&h).is_gt() {
            return Err(RigorError::Parse(format!("{lo} > {hi}")));
        }
        Ok(BigInterval::new(l, h))
    }
}

fn decimal_digits(bits: u32) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p256() -> Precision {
        Precision::new(256).unwrap()
    }

    #[test]
    fn exact_addition() {
        let a = BigInterval::from_f64(1.0, p256());
        let b = BigInterval::from_f64(2.0, p256());
        assert_eq!(a + &b, BigInterval::from_f64(3.0, p256()));
    }

    #[test]
    fn sign_cases_of_product() {
        let a = BigInterval::from_bounds(-1.0, 2.0, p256());
        let b = BigInterval::from_bounds(3.0, 4.0, p256());
        assert_eq!(a * &b, BigInterval::from_bounds(-4.0, 8.0, p256()));
    }

    #[test]
    fn pi_width_at_256_bits() {
        let pi = BigInterval::pi(p256());
        assert!(pi.width() < 1e-70);
        assert!(pi.contains_f64(std::f64::consts::PI) || pi.lo_f64() <= std::f64::consts::PI);
    }

    #[test]
    fn exp_of_zero_is_tight() {
        let one = BigInterval::zero(Precision::new(64).unwrap()).exp();
        assert!(one.contains_f64(1.0));
        assert!(one.width() <= 2f64.powi(-50));
    }

    #[test]
    fn zeta_three() {
        let z = BigInterval::zeta(3, p256());
        assert!(z.contains_f64(1.2020569031595942) || (z.mid() - 1.2020569031595942).abs() < 1e-15);
    }

    #[test]
    fn decimal_round_trip_keeps_enclosure() {
        let x = BigInterval::from_f64(1.0, p256()).try_div(&BigInterval::from_f64(3.0, p256())).unwrap();
        let back = BigInterval::from_decimal(&x.lo_decimal(), &x.hi_decimal(), p256()).unwrap();
        assert!(back.contains(&x));
        assert!(back.width() < 1e-70);
    }

    #[test]
    fn division_by_zero_is_error() {
        let a = BigInterval::from_f64(1.0, p256());
        let b = BigInterval::from_bounds(-1.0, 1.0, p256());
        assert!(a.try_div(&b).is_err());
    }
}
