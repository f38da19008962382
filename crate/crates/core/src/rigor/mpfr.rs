//! Minimal safe wrapper over the system MPFR library.
//!
//! Only the handful of correctly rounded primitives needed by the interval
//! backends are exposed. Every operation takes an explicit rounding
//! direction; callers never rely on a global rounding mode.

use std::ffi::{CStr, CString};
use std::fmt;
use std::os::raw::{c_char, c_int, c_long, c_ulong};

#[repr(C)]
struct MpfrStruct {
    prec: c_long,
    sign: c_int,
    exp: c_long,
    limbs: *mut c_ulong,
}

type Ptr = *mut MpfrStruct;
type SrcPtr = *const MpfrStruct;

#[link(name = "mpfr")]
#[link(name = "gmp")]
extern "C" {
    fn mpfr_init2(x: Ptr, prec: c_long);
    fn mpfr_clear(x: Ptr);
    fn mpfr_set(rop: Ptr, op: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_set_d(rop: Ptr, op: f64, rnd: c_int) -> c_int;
    fn mpfr_set_si(rop: Ptr, op: c_long, rnd: c_int) -> c_int;
    fn mpfr_set_str(rop: Ptr, s: *const c_char, base: c_int, rnd: c_int) -> c_int;
    fn mpfr_set_inf(rop: Ptr, sign: c_int);
    fn mpfr_get_d(op: SrcPtr, rnd: c_int) -> f64;
    fn mpfr_get_str(
        s: *mut c_char,
        exp: *mut c_long,
        base: c_int,
        n: usize,
        op: SrcPtr,
        rnd: c_int,
    ) -> *mut c_char;
    fn mpfr_free_str(s: *mut c_char);
    fn mpfr_add(rop: Ptr, a: SrcPtr, b: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_sub(rop: Ptr, a: SrcPtr, b: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_mul(rop: Ptr, a: SrcPtr, b: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_div(rop: Ptr, a: SrcPtr, b: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_sqr(rop: Ptr, a: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_sqrt(rop: Ptr, a: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_exp(rop: Ptr, a: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_log(rop: Ptr, a: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_sin(rop: Ptr, a: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_cos(rop: Ptr, a: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_sin_cos(sop: Ptr, cop: Ptr, a: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_mul_ui(rop: Ptr, a: SrcPtr, n: c_ulong, rnd: c_int) -> c_int;
    fn mpfr_neg(rop: Ptr, a: SrcPtr, rnd: c_int) -> c_int;
    fn mpfr_const_pi(rop: Ptr, rnd: c_int) -> c_int;
    fn mpfr_zeta_ui(rop: Ptr, n: c_ulong, rnd: c_int) -> c_int;
    fn mpfr_cmp(a: SrcPtr, b: SrcPtr) -> c_int;
    fn mpfr_nan_p(a: SrcPtr) -> c_int;
    fn mpfr_zero_p(a: SrcPtr) -> c_int;
    fn mpfr_sgn(a: SrcPtr) -> c_int;
}

/// Rounding direction, matching MPFR's `mpfr_rnd_t` numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Round {
    Nearest = 0,
    Up = 2,
    Down = 3,
}

impl Round {
    fn raw(self) -> c_int {
        self as c_int
    }
}

/// Owned MPFR floating-point number with fixed precision.
pub struct MpFloat {
    raw: MpfrStruct,
}

// MPFR values own their limbs exclusively; the library keeps no shared
// mutable state for plain arithmetic (constant caches are thread-local).
unsafe impl Send for MpFloat {}
unsafe impl Sync for MpFloat {}

impl MpFloat {
    pub fn new(prec: u32) -> Self {
        let mut raw = MpfrStruct {
            prec: 0,
            sign: 0,
            exp: 0,
            limbs: std::ptr::null_mut(),
        };
        unsafe {
            mpfr_init2(&mut raw, prec as c_long);
            mpfr_set_si(&mut raw, 0, Round::Nearest.raw());
        }
        MpFloat { raw }
    }

    fn ptr(&mut self) -> Ptr {
        &mut self.raw
    }

    fn src(&self) -> SrcPtr {
        &self.raw
    }

    pub fn prec(&self) -> u32 {
        self.raw.prec as u32
    }

    pub fn from_f64(x: f64, prec: u32, rnd: Round) -> Self {
        let mut r = Self::new(prec);
        unsafe { mpfr_set_d(r.ptr(), x, rnd.raw()) };
        r
    }

    pub fn from_i64(x: i64, prec: u32, rnd: Round) -> Self {
        let mut r = Self::new(prec);
        unsafe { mpfr_set_si(r.ptr(), x as c_long, rnd.raw()) };
        r
    }

    pub fn infinity(prec: u32, positive: bool) -> Self {
        let mut r = Self::new(prec);
        unsafe { mpfr_set_inf(r.ptr(), if positive { 1 } else { -1 }) };
        r
    }

    /// Parses a decimal literal, rounding in the requested direction.
    pub fn parse(s: &str, prec: u32, rnd: Round) -> Option<Self> {
        let c = CString::new(s.trim()).ok()?;
        let mut r = Self::new(prec);
        let status = unsafe { mpfr_set_str(r.ptr(), c.as_ptr(), 10, rnd.raw()) };
        if status != 0 || r.is_nan() {
            return None;
        }
        Some(r)
    }

    pub fn pi(prec: u32, rnd: Round) -> Self {
        let mut r = Self::new(prec);
        unsafe { mpfr_const_pi(r.ptr(), rnd.raw()) };
        r
    }

    pub fn zeta(n: u64, prec: u32, rnd: Round) -> Self {
        let mut r = Self::new(prec);
        unsafe { mpfr_zeta_ui(r.ptr(), n as c_ulong, rnd.raw()) };
        r
    }

    pub fn to_f64(&self, rnd: Round) -> f64 {
        unsafe { mpfr_get_d(self.src(), rnd.raw()) }
    }

    pub fn round_to(&self, prec: u32, rnd: Round) -> Self {
        let mut r = Self::new(prec);
        unsafe { mpfr_set(r.ptr(), self.src(), rnd.raw()) };
        r
    }

    pub fn is_nan(&self) -> bool {
        unsafe { mpfr_nan_p(self.src()) != 0 }
    }

    pub fn is_zero(&self) -> bool {
        unsafe { mpfr_zero_p(self.src()) != 0 }
    }

    pub fn signum(&self) -> i32 {
        unsafe { mpfr_sgn(self.src()) }
    }

    pub fn cmp_value(&self, other: &MpFloat) -> std::cmp::Ordering {
        let c = unsafe { mpfr_cmp(self.src(), other.src()) };
        c.cmp(&0)
    }

    /// Decimal digits of the value rounded in direction `rnd` to `digits`
    /// significant digits. Returns `(negative, digit string, exponent)` with
    /// value = ±0.d1d2d3... × 10^exponent.
    pub fn decimal_digits(&self, digits: usize, rnd: Round) -> (bool, String, i64) {
        let mut exp: c_long = 0;
        let s = unsafe {
            let p = mpfr_get_str(
                std::ptr::null_mut(),
                &mut exp,
                10,
                digits.max(2),
                self.src(),
                rnd.raw(),
            );
            let owned = CStr::from_ptr(p).to_string_lossy().into_owned();
            mpfr_free_str(p);
            owned
        };
        match s.strip_prefix('-') {
            Some(rest) => (true, rest.to_string(), exp as i64),
            None => (false, s, exp as i64),
        }
    }

    /// Scientific-notation decimal string rounded in direction `rnd`.
    pub fn to_decimal(&self, digits: usize, rnd: Round) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let (neg, ds, exp) = self.decimal_digits(digits, rnd);
        if ds.starts_with('@') {
            // @Inf@ / @NaN@
            let body = ds.trim_matches('@').to_lowercase();
            return if neg { format!("-{body}") } else { body };
        }
        let trimmed = ds.trim_end_matches('0');
        let trimmed = if trimmed.is_empty() { "0" } else { trimmed };
        let (head, tail) = trimmed.split_at(1);
        let sign = if neg { "-" } else { "" };
        if tail.is_empty() {
            format!("{sign}{head}e{}", exp - 1)
        } else {
            format!("{sign}{head}.{tail}e{}", exp - 1)
        }
    }
}

impl Clone for MpFloat {
    fn clone(&self) -> Self {
        let mut r = Self::new(self.prec());
        unsafe { mpfr_set(r.ptr(), self.src(), Round::Nearest.raw()) };
        r
    }
}

impl Drop for MpFloat {
    fn drop(&mut self) {
        unsafe { mpfr_clear(&mut self.raw) };
    }
}

impl fmt::Debug for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(20, Round::Nearest))
    }
}

macro_rules! binary_op {
    ($name:ident, $ffi:ident) => {
        pub fn $name(&self, other: &MpFloat, prec: u32, rnd: Round) -> MpFloat {
            let mut r = MpFloat::new(prec);
            unsafe { $ffi(r.ptr(), self.src(), other.src(), rnd.raw()) };
            r
        }
    };
}

macro_rules! unary_op {
    ($name:ident, $ffi:ident) => {
        pub fn $name(&self, prec: u32, rnd: Round) -> MpFloat {
            let mut r = MpFloat::new(prec);
            unsafe { $ffi(r.ptr(), self.src(), rnd.raw()) };
            r
        }
    };
}

impl MpFloat {
    binary_op!(add, mpfr_add);
    binary_op!(sub, mpfr_sub);
    binary_op!(mul, mpfr_mul);
    binary_op!(div, mpfr_div);
    unary_op!(sqr, mpfr_sqr);
    unary_op!(sqrt, mpfr_sqrt);
    unary_op!(exp, mpfr_exp);
    unary_op!(ln, mpfr_log);
    unary_op!(sin, mpfr_sin);
    unary_op!(cos, mpfr_cos);
    unary_op!(neg, mpfr_neg);

    /// `(sin x, cos x)`, each correctly rounded to nearest.
    pub fn sin_cos(&self, prec: u32) -> (MpFloat, MpFloat) {
        let mut s = MpFloat::new(prec);
        let mut c = MpFloat::new(prec);
        unsafe { mpfr_sin_cos(s.ptr(), c.ptr(), self.src(), Round::Nearest.raw()) };
        (s, c)
    }

    pub fn mul_u64(&self, n: u64, prec: u32, rnd: Round) -> MpFloat {
        let mut r = MpFloat::new(prec);
        unsafe { mpfr_mul_ui(r.ptr(), self.src(), n as c_ulong, rnd.raw()) };
        r
    }

    /// Binary exponent `e` with `2^(e-1) <= |x| < 2^e` (0 for zero).
    pub fn exponent(&self) -> i64 {
        if self.is_zero() {
            return 0;
        }
        self.raw.exp as i64
    }

    /// In-place `self += a * b` with the product and sum each rounded in
    /// direction `rnd`. Both roundings go the same way, so the result is a
    /// one-sided bound of the exact value.
    pub fn add_mul_assign(&mut self, a: &MpFloat, b: &MpFloat, scratch: &mut MpFloat, rnd: Round) {
        unsafe {
            mpfr_mul(scratch.ptr(), a.src(), b.src(), rnd.raw());
            let me: Ptr = self.ptr();
            mpfr_add(me, me, scratch.src(), rnd.raw());
        }
    }
}

/// Directed enclosure of `sin` or `cos` over `[lo, hi]`, computed at `prec` bits.
///
/// Endpoint values are rounded outward and interior extrema are detected by
/// testing which critical points `(n + shift)·π` can lie inside the
/// interval, using an outward enclosure of π.
pub fn trig_range(lo: &MpFloat, hi: &MpFloat, prec: u32, is_sin: bool) -> (MpFloat, MpFloat) {
    let one = MpFloat::from_i64(1, prec, Round::Nearest);
    let minus_one = MpFloat::from_i64(-1, prec, Round::Nearest);
    let pi_lo = MpFloat::pi(prec, Round::Down);
    let pi_hi = MpFloat::pi(prec, Round::Up);
    let two_pi = pi_lo.add(&pi_lo, prec, Round::Down);
    let width = hi.sub(lo, prec, Round::Up);
    if lo.is_nan() || hi.is_nan() || width.cmp_value(&two_pi).is_ge() {
        return (minus_one, one);
    }
    let f = |x: &MpFloat, rnd: Round| if is_sin { x.sin(prec, rnd) } else { x.cos(prec, rnd) };
    let (a_lo, a_hi) = (f(lo, Round::Down), f(lo, Round::Up));
    let (b_lo, b_hi) = (f(hi, Round::Down), f(hi, Round::Up));
    let mut out_lo = if a_lo.cmp_value(&b_lo).is_le() { a_lo } else { b_lo };
    let mut out_hi = if a_hi.cmp_value(&b_hi).is_ge() { a_hi } else { b_hi };

    // Critical points: cos extrema at nπ, sin extrema at (n + 1/2)π; the
    // value there is (-1)^n.
    let shift = if is_sin { 0.5 } else { 0.0 };
    let n_from = (lo.to_f64(Round::Down) / std::f64::consts::PI - shift).floor() as i64 - 1;
    let n_to = (hi.to_f64(Round::Up) / std::f64::consts::PI - shift).ceil() as i64 + 1;
    let half = MpFloat::from_f64(shift, prec, Round::Nearest);
    for n in n_from..=n_to {
        let k = MpFloat::from_i64(n, prec, Round::Nearest).add(&half, prec, Round::Nearest);
        // k is exact (an integer or half-integer well inside the precision).
        let (c_lo, c_hi) = if k.signum() >= 0 {
            (k.mul(&pi_lo, prec, Round::Down), k.mul(&pi_hi, prec, Round::Up))
        } else {
            (k.mul(&pi_hi, prec, Round::Down), k.mul(&pi_lo, prec, Round::Up))
        };
        let may_contain = c_hi.cmp_value(lo).is_ge() && c_lo.cmp_value(hi).is_le();
        if may_contain {
            if n.rem_euclid(2) == 0 {
                out_hi = one.clone();
            } else {
                out_lo = minus_one.clone();
            }
        }
    }
    if out_lo.cmp_value(&minus_one).is_lt() {
        out_lo = minus_one;
    }
    if out_hi.cmp_value(&one).is_gt() {
        out_hi = one;
    }
    (out_lo, out_hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_is_bracketed() {
        let lo = MpFloat::pi(256, Round::Down);
        let hi = MpFloat::pi(256, Round::Up);
        assert!(lo.cmp_value(&hi).is_lt());
        assert_eq!(lo.to_f64(Round::Nearest), std::f64::consts::PI);
    }

    #[test]
    fn parse_directed() {
        let lo = MpFloat::parse("0.1", 53, Round::Down).unwrap();
        let hi = MpFloat::parse("0.1", 53, Round::Up).unwrap();
        assert!(lo.to_f64(Round::Nearest) < hi.to_f64(Round::Nearest));
        assert!(MpFloat::parse("zz", 53, Round::Down).is_none());
    }

    #[test]
    fn decimal_formatting() {
        let x = MpFloat::from_f64(1.5, 64, Round::Nearest);
        assert_eq!(x.to_decimal(10, Round::Nearest), "1.5e0");
        let y = MpFloat::from_f64(-0.25, 64, Round::Nearest);
        assert_eq!(y.to_decimal(10, Round::Nearest), "-2.5e-1");
    }

    #[test]
    fn cos_range_detects_maximum() {
        let lo = MpFloat::from_f64(-0.5, 128, Round::Nearest);
        let hi = MpFloat::from_f64(0.5, 128, Round::Nearest);
        let (a, b) = trig_range(&lo, &hi, 128, false);
        assert_eq!(b.to_f64(Round::Up), 1.0);
        assert!(a.to_f64(Round::Down) <= 0.5f64.cos());
    }
}
