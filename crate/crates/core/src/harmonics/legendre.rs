//! Normalised associated Legendre functions without the Condon–Shortley phase.
//!
//! `Q_l^m(μ) s^m` with `s = sin θ` is the latitude factor of the real
//! harmonic: `Y_lm = Q_l^|m| s^|m| cos(mφ)` for `m >= 0` and
//! `Q_l^|m| s^|m| sin(|m|φ)` for `m < 0`, normalised on `L^2(S^2)`.
//!
//! Interval evaluation of the three-term recurrence overestimates by up to
//! `(1 + √2)^l`, so the rigorous tables run in MPFR with enough guard bits to
//! absorb it and are rounded outward afterwards.

use crate::rigor::{BigInterval, Precision, RigorError, Scalar};

/// Position of `(l, m)`, `0 <= m <= l`, in a triangular table.
pub fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

pub fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Working precision for tables up to degree `lmax`.
pub fn table_precision(working: Precision, lmax: usize) -> Precision {
    working.plus(64 + (13 * lmax as u32).div_ceil(10))
}

/// Recurrence coefficients, precomputed at one precision.
#[derive(Debug, Clone)]
pub struct LegendreCoeffs {
    lmax: usize,
    prec: Precision,
    q00: BigInterval,
    /// `Q_m^m = diag[m] s Q_{m-1}^{m-1}`.
    diag: Vec<BigInterval>,
    /// `Q_{m+1}^m = sub[m] μ Q_m^m`.
    sub: Vec<BigInterval>,
    /// `Q_l^m = a (μ Q_{l-1}^m - b Q_{l-2}^m)`, indexed by [`tri`].
    a: Vec<BigInterval>,
    b: Vec<BigInterval>,
}

fn sqrt_ratio(num: i64, den: i64, prec: Precision) -> Result<BigInterval, RigorError> {
    BigInterval::from_i64(num, prec)
        .try_div(&BigInterval::from_i64(den, prec))?
        .try_sqrt()
}

impl LegendreCoeffs {
    pub fn new(lmax: usize, prec: Precision) -> Result<Self, RigorError> {
        let four_pi = BigInterval::pi(prec) * BigInterval::from_i64(4, prec);
        let q00 = BigInterval::one(prec).try_div(&four_pi.try_sqrt()?)?;
        let mut diag = vec![BigInterval::one(prec)];
        let mut sub = Vec::with_capacity(lmax + 1);
        for m in 1..=lmax as i64 {
            // The real basis carries an extra √2 for every m >= 1.
            let d = if m == 1 {
                sqrt_ratio(3, 1, prec)?
            } else {
                sqrt_ratio(2 * m + 1, 2 * m, prec)?
            };
            diag.push(d);
        }
        for m in 0..=lmax as i64 {
            sub.push(sqrt_ratio(2 * m + 3, 1, prec)?);
        }
        let zero = BigInterval::zero(prec);
        let mut a = vec![zero.clone(); tri_len(lmax)];
        let mut b = vec![zero; tri_len(lmax)];
        for l in 2..=lmax {
            for m in 0..=l - 2 {
                let (li, mi) = (l as i64, m as i64);
                a[tri(l, m)] = sqrt_ratio(4 * li * li - 1, li * li - mi * mi, prec)?;
                b[tri(l, m)] =
                    sqrt_ratio((li - 1) * (li - 1) - mi * mi, 4 * (li - 1) * (li - 1) - 1, prec)?;
            }
        }
        Ok(LegendreCoeffs {
            lmax,
            prec,
            q00,
            diag,
            sub,
            a,
            b,
        })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    /// `Q_l^m(μ) s^m` for all `m <= l <= lmax`, in [`tri`] order. Pass
    /// `s = 1` to get the bare `Q_l^m(μ)`.
    pub fn row(&self, mu: &BigInterval, s: &BigInterval) -> Vec<BigInterval> {
        let n = self.lmax;
        let mut out = vec![BigInterval::zero(self.prec); tri_len(n)];
        let mut pmm = self.q00.clone();
        for m in 0..=n {
            if m > 0 {
                pmm = pmm * &self.diag[m] * s;
            }
            out[tri(m, m)] = pmm.clone();
            if m == n {
                break;
            }
            let mut p0 = pmm.clone();
            let mut p1 = self.sub[m].clone() * mu * &pmm;
            out[tri(m + 1, m)] = p1.clone();
            for l in m + 2..=n {
                let t = tri(l, m);
                let p2 = self.a[t].clone() * (mu.clone() * &p1 - self.b[t].clone() * &p0);
                out[t] = p2.clone();
                p0 = std::mem::replace(&mut p1, p2);
            }
        }
        out
    }
}

/// Binary64 version of [`LegendreCoeffs::row`] (no enclosure claim).
pub fn row_f64(lmax: usize, mu: f64, s: f64) -> Vec<f64> {
    let mut out = vec![0.0; tri_len(lmax)];
    let mut pmm = 0.5 / std::f64::consts::PI.sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            let d = if m == 1 { 3f64.sqrt() } else { ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() };
            pmm *= d * s;
        }
        out[tri(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mut p0 = pmm;
        let mut p1 = (2.0 * m as f64 + 3.0).sqrt() * mu * pmm;
        out[tri(m + 1, m)] = p1;
        for l in m + 2..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let p2 = a * (mu * p1 - b * p0);
            out[tri(l, m)] = p2;
            p0 = p1;
            p1 = p2;
        }
    }
    out
}

/// All `Y_lm` (index `l^2 + l + m`) at the Cartesian point `(x, y, z)` of
/// the unit sphere, via `Y_lm = Q_l^|m|(z) Re/Im (x + iy)^|m|`.
pub fn ylm_cartesian(
    coeffs: &LegendreCoeffs,
    x: &BigInterval,
    y: &BigInterval,
    z: &BigInterval,
) -> Vec<BigInterval> {
    let n = coeffs.lmax;
    let prec = coeffs.prec;
    let q = coeffs.row(z, &BigInterval::one(prec));
    // (x + iy)^m = re[m] + i im[m]; growth of the box products is at most
    // √2 per step and is covered by the guard bits.
    let mut re = vec![BigInterval::one(prec)];
    let mut im = vec![BigInterval::zero(prec)];
    for m in 1..=n {
        let r = re[m - 1].clone() * x - im[m - 1].clone() * y;
        let i = re[m - 1].clone() * y + im[m - 1].clone() * x;
        re.push(r);
        im.push(i);
    }
    let mut out = vec![BigInterval::zero(prec); (n + 1) * (n + 1)];
    for l in 0..=n {
        for m in 0..=l {
            let base = l * l + l;
            out[base + m] = q[tri(l, m)].clone() * &re[m];
            if m > 0 {
                out[base - m] = q[tri(l, m)].clone() * &im[m];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigor::Enclosure;
    use std::f64::consts::PI;

    fn p() -> Precision {
        Precision::new(128).unwrap()
    }

    #[test]
    fn low_degree_closed_forms() {
        let c = LegendreCoeffs::new(4, p()).unwrap();
        for &mu in &[-0.9, -0.3, 0.0, 0.25, 0.7] {
            let s = (1.0f64 - mu * mu).sqrt();
            let mu_i = BigInterval::from_f64(mu, p());
            let s_i = (BigInterval::one(p()) - mu_i.sqr()).try_sqrt().unwrap();
            let row = c.row(&mu_i, &s_i);
            let expect = [
                (0, 0, 0.5 / PI.sqrt()),
                (1, 0, (3.0 / (4.0 * PI)).sqrt() * mu),
                (1, 1, (3.0 / (4.0 * PI)).sqrt() * s),
                (2, 0, (5.0 / (16.0 * PI)).sqrt() * (3.0 * mu * mu - 1.0)),
                (2, 1, (15.0 / (4.0 * PI)).sqrt() * mu * s),
                (2, 2, (15.0 / (16.0 * PI)).sqrt() * s * s),
                (3, 2, (105.0 / (16.0 * PI)).sqrt() * mu * s * s),
                (4, 0, 3.0 / (16.0 * PI.sqrt()) * (35.0 * mu.powi(4) - 30.0 * mu * mu + 3.0)),
            ];
            for (l, m, v) in expect {
                let got = &row[tri(l, m)];
                assert!((got.mid() - v).abs() < 1e-14, "l={l} m={m} mu={mu}");
            }
            let f = row_f64(4, mu, s);
            for (a, b) in f.iter().zip(&row) {
                assert!((a - b.mid()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn high_degree_rows_stay_narrow() {
        let lmax = 64;
        let prec = table_precision(Precision::DOUBLE, lmax);
        let c = LegendreCoeffs::new(lmax, prec).unwrap();
        let mu = BigInterval::from_f64(0.999, prec);
        let s = (BigInterval::one(prec) - mu.sqr()).try_sqrt().unwrap();
        let row = c.row(&mu, &s);
        for v in &row {
            assert!(v.width() < 1e-30 * (1.0 + v.mag()));
        }
    }

    #[test]
    fn cartesian_form_matches_row() {
        let c = LegendreCoeffs::new(6, p()).unwrap();
        let (theta, phi) = (0.7f64, 2.1f64);
        let x = BigInterval::from_f64(theta.sin() * phi.cos(), p());
        let y = BigInterval::from_f64(theta.sin() * phi.sin(), p());
        let z = BigInterval::from_f64(theta.cos(), p());
        let all = ylm_cartesian(&c, &x, &y, &z);
        let row = row_f64(6, theta.cos(), theta.sin());
        for l in 0..=6usize {
            for m in -(l as i64)..=l as i64 {
                let am = m.unsigned_abs() as usize;
                let trig = if m >= 0 { (am as f64 * phi).cos() } else { (am as f64 * phi).sin() };
                let v = row[tri(l, am)] * trig;
                let idx = (l * l + l) as i64 + m;
                assert!((all[idx as usize].mid() - v).abs() < 1e-13, "l={l} m={m}");
            }
        }
    }
}
