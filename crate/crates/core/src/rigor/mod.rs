//! Interval arithmetic and verified linear algebra.
//!
//! Two rigorous backends implement [`Enclosure`]: [`Interval`] (binary64
//! endpoints, outward rounding through error-free transforms) and
//! [`BigInterval`] (MPFR endpoints at any precision). Plain `f64` implements
//! [`Scalar`] so that the non-rigorous solver can share the harmonic-analysis
//! kernels with the certifier.

mod big;
mod interval;
mod matrix;
pub mod mpfr;

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use big::BigInterval;
pub use interval::Interval;
pub use matrix::{InverseBound, IntervalMatrix, NormKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RigorError {
    #[error("division by an interval containing zero")]
    DivisionByZero,
    #[error("square root of an interval with negative part")]
    SqrtOfNegative,
    #[error("logarithm of an interval with nonpositive part")]
    LogOfNonPositive,
    #[error("working precision must be at least 53 bits, got {0}")]
    PrecisionTooLow(u32),
    #[error("midpoint inverse failed")]
    MidpointInverseFailed,
    #[error("inverse not certified: ||I - BA|| bound {0} >= 1")]
    InverseNotCertified(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cannot parse interval endpoint '{0}'")]
    Parse(String),
    #[error("could not certify Gauss-Legendre root {index} of degree {degree}")]
    RootCertification { degree: usize, index: usize },
}

/// Working precision in bits. 53 selects the binary64 backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Precision(u32);

impl Precision {
    pub const DOUBLE: Precision = Precision(53);

    pub fn new(bits: u32) -> Result<Self, RigorError> {
        if bits < 53 {
            Err(RigorError::PrecisionTooLow(bits))
        } else {
            Ok(Precision(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Precision raised by `extra` bits.
    pub fn plus(self, extra: u32) -> Precision {
        Precision(self.0 + extra)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DOUBLE
    }
}

impl TryFrom<u32> for Precision {
    type Error = RigorError;
    fn try_from(bits: u32) -> Result<Self, RigorError> {
        Precision::new(bits)
    }
}

impl From<Precision> for u32 {
    fn from(p: Precision) -> u32 {
        p.0
    }
}

/// Arithmetic shared by rigorous enclosures and plain floating point.
pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
    /// Exact conversion (every binary64 value fits the working precision).
    fn from_f64(x: f64, prec: Precision) -> Self;
    fn from_i64(n: i64, prec: Precision) -> Self;
    /// Outward-rounded conversion from a high-precision enclosure.
    fn from_big(x: &BigInterval) -> Self;
    fn precision(&self) -> Precision;
    /// A floating-point representative (midpoint for intervals).
    fn mid(&self) -> f64;

    fn sqr(&self) -> Self;
    fn abs(&self) -> Self;
    fn max(&self, other: &Self) -> Self;
    fn min(&self, other: &Self) -> Self;
    fn powi(&self, n: u32) -> Self;
    fn exp(&self) -> Self;
    fn try_div(&self, other: &Self) -> Result<Self, RigorError>;
    fn try_sqrt(&self) -> Result<Self, RigorError>;
    fn try_ln(&self) -> Result<Self, RigorError>;
    fn pi(prec: Precision) -> Self;

    fn zero(prec: Precision) -> Self {
        Self::from_f64(0.0, prec)
    }

    fn one(prec: Precision) -> Self {
        Self::from_f64(1.0, prec)
    }

    fn mul_f64(&self, c: f64) -> Self {
        self.clone() * Self::from_f64(c, self.precision())
    }

    /// `self += a * b`.
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        let p = a.clone() * b;
        *self += &p;
    }

    fn dot(a: &[Self], b: &[Self], prec: Precision) -> Self {
        generic_dot(a, b, prec)
    }

    /// Row-major product of an `m x k` and a `k x n` matrix.
    fn matmul(a: &[Self], b: &[Self], m: usize, k: usize, n: usize, prec: Precision) -> Vec<Self> {
        generic_matmul(a, b, m, k, n, prec)
    }
}

pub(crate) fn generic_dot<S: Scalar>(a: &[S], b: &[S], prec: Precision) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero(prec);
    for (x, y) in a.iter().zip(b) {
        acc.mul_add_assign(x, y);
    }
    acc
}

pub(crate) fn generic_matmul<S: Scalar>(
    a: &[S],
    b: &[S],
    m: usize,
    k: usize,
    n: usize,
    prec: Precision,
) -> Vec<S> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut cols: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut col = Vec::with_capacity(k);
    for j in 0..n {
        col.clear();
        col.extend((0..k).map(|t| b[t * n + j].clone()));
        cols.push((0..m).map(|i| S::dot(&a[i * k..(i + 1) * k], &col, prec)).collect());
    }
    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        for c in &cols {
            out.push(c[i].clone());
        }
    }
    out
}

/// A rigorous enclosure of a set of reals.
pub trait Enclosure: Scalar + PartialEq {
    /// Builds `[lo, hi]` from binary64 endpoints (`lo <= hi`).
    fn from_bounds(lo: f64, hi: f64, prec: Precision) -> Self;
    fn entire(prec: Precision) -> Self;
    /// Lower endpoint rounded down to binary64.
    fn lo_f64(&self) -> f64;
    /// Upper endpoint rounded up to binary64.
    fn hi_f64(&self) -> f64;
    fn to_big(&self) -> BigInterval;
    fn contains(&self, other: &Self) -> bool;
    fn overlaps(&self, other: &Self) -> bool;
    fn hull(&self, other: &Self) -> Self;
    /// Point enclosure of the upper endpoint.
    fn upper(&self) -> Self;
    /// Point enclosure of the lower endpoint.
    fn lower(&self) -> Self;
    /// Decimal string no larger than the lower endpoint.
    fn lo_decimal(&self) -> String;
    /// Decimal string no smaller than the upper endpoint.
    fn hi_decimal(&self) -> String;
    /// Parses decimal endpoints, rounding outward.
    fn from_decimal(lo: &str, hi: &str, prec: Precision) -> Result<Self, RigorError>;

    fn contains_f64(&self, x: f64) -> bool {
        self.lo_f64() <= x && x <= self.hi_f64()
    }

    /// Upper bound on the width.
    fn width(&self) -> f64 {
        let b = self.to_big();
        let p = b.precision().bits();
        b.hi.sub(&b.lo, p, mpfr::Round::Up).to_f64(mpfr::Round::Up)
    }

    /// Upper bound on `max |x|`.
    fn mag(&self) -> f64 {
        self.lo_f64().abs().max(self.hi_f64().abs())
    }

    /// Lower bound on `min |x|`.
    fn mig(&self) -> f64 {
        let (lo, hi) = (self.lo_f64(), self.hi_f64());
        if lo > 0.0 {
            lo
        } else if hi < 0.0 {
            -hi
        } else {
            0.0
        }
    }

    fn is_finite(&self) -> bool {
        self.lo_f64().is_finite() && self.hi_f64().is_finite()
    }

    /// Whether the enclosure certainly lies strictly above `x`.
    fn certainly_gt(&self, x: f64) -> bool {
        self.lo_f64() > x
    }

    /// Whether the enclosure certainly lies strictly below `x`.
    fn certainly_lt(&self, x: f64) -> bool {
        self.hi_f64() < x
    }
}

/// Interval of reals compatible with a decimal value printed to a fixed
/// number of digits: the printed value widened by one unit in its last
/// place, so both truncated and rounded printouts are covered.
pub fn printed_value(s: &str) -> Result<BigInterval, RigorError> {
    let t = s.trim();
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], &t[i + 1..]),
        None => (t, "0"),
    };
    let exp: i64 = exp.parse().map_err(|_| RigorError::Parse(s.to_string()))?;
    let decimals = mant.find('.').map_or(0, |i| mant.len() - i - 1) as i64;
    let ulp = format!("1e{}", exp - decimals);
    let prec = Precision(192);
    let v = BigInterval::from_decimal(t, t, prec)?;
    let u = BigInterval::from_decimal(&ulp, &ulp, prec)?;
    Ok(BigInterval::new(
        v.lo.sub(&u.hi, 192, mpfr::Round::Down),
        v.hi.add(&u.hi, 192, mpfr::Round::Up),
    ))
}

/// Whether an enclosure is consistent with a printed table value.
pub fn matches_printed<S: Enclosure>(x: &S, printed: &str) -> bool {
    match printed_value(printed) {
        Ok(p) => x.to_big().overlaps(&p),
        Err(_) => false,
    }
}

/// Formats an upper bound (`up = true`) or lower bound with ten digits after
/// the decimal point, switching to scientific notation below `1e-3`.
pub fn format_directed<S: Enclosure>(x: &S, up: bool) -> String {
    let b = x.to_big();
    let v = if up { &b.hi } else { &b.lo };
    let rnd = if up { mpfr::Round::Up } else { mpfr::Round::Down };
    format_mp(v, rnd)
}

pub(crate) fn format_mp(v: &mpfr::MpFloat, rnd: mpfr::Round) -> String {
    if v.is_zero() {
        return "0.0000000000".to_string();
    }
    let magnitude = v.to_f64(mpfr::Round::Nearest).abs();
    if !magnitude.is_finite() {
        return v.to_decimal(11, rnd);
    }
    if magnitude >= 1e-3 {
        // Fixed point: digits before the point plus ten after. A carry in
        // the directed rounding can add a leading digit, hence the retry.
        let (_, _, mut exp) = v.decimal_digits(20, rnd);
        let (neg, ds, exp) = loop {
            let digits = (exp + 10).max(1) as usize;
            let (neg, ds, e) = v.decimal_digits(digits, rnd);
            if e == exp {
                break (neg, ds, e);
            }
            exp = e;
        };
        let body = if exp <= 0 {
            let frac = format!("{}{ds}", "0".repeat((-exp) as usize));
            format!("0.{}", &frac[..10.min(frac.len())])
        } else {
            let (ip, fp) = ds.split_at(exp as usize);
            format!("{ip}.{fp}")
        };
        if neg {
            format!("-{body}")
        } else {
            body
        }
    } else {
        let (neg, ds, exp) = v.decimal_digits(11, rnd);
        let (head, tail) = ds.split_at(1);
        let sign = if neg { "-" } else { "" };
        format!("{sign}{head}.{tail}e{}", exp - 1)
    }
}


impl Scalar for f64 {
    fn from_f64(x: f64, _prec: Precision) -> Self {
        x
    }

    fn from_i64(n: i64, _prec: Precision) -> Self {
        n as f64
    }

    fn from_big(x: &BigInterval) -> Self {
        x.mid()
    }

    fn precision(&self) -> Precision {
        Precision::DOUBLE
    }

    fn mid(&self) -> f64 {
        *self
    }

    fn sqr(&self) -> Self {
        self * self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn max(&self, o: &Self) -> Self {
        f64::max(*self, *o)
    }

    fn min(&self, o: &Self) -> Self {
        f64::min(*self, *o)
    }

    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn try_div(&self, o: &Self) -> Result<Self, RigorError> {
        if *o == 0.0 {
            Err(RigorError::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }

    fn try_sqrt(&self) -> Result<Self, RigorError> {
        if *self < 0.0 {
            Err(RigorError::SqrtOfNegative)
        } else {
            Ok(self.sqrt())
        }
    }

    fn try_ln(&self) -> Result<Self, RigorError> {
        if *self <= 0.0 {
            Err(RigorError::LogOfNonPositive)
        } else {
            Ok(self.ln())
        }
    }

    fn pi(_prec: Precision) -> Self {
        std::f64::consts::PI
    }

    fn mul_f64(&self, c: f64) -> Self {
        self * c
    }

    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }

    fn dot(a: &[Self], b: &[Self], _prec: Precision) -> Self {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn matmul(a: &[Self], b: &[Self], m: usize, k: usize, n: usize, _prec: Precision) -> Vec<Self> {
        let am = nalgebra::DMatrix::from_row_slice(m, k, a);
        let bm = nalgebra::DMatrix::from_row_slice(k, n, b);
        let c = am * bm;
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                out.push(c[(i, j)]);
            }
        }
        out
    }
}
