//! Latitude–longitude product grids: synthesis, analysis and Galerkin
//! matrices through dense (interval) matrix products.

use std::ops::Range;

use super::legendre::{row_f64, table_precision, tri, LegendreCoeffs};
use super::{index, CoeffFunction};
use crate::par;
use crate::quadrature::{gauss_legendre, gauss_legendre_f64};
use crate::rigor::{BigInterval, Precision, RigorError, Scalar};

/// Rows per work unit in streamed evaluation.
const CHUNK: usize = 16;

/// `nlat x nphi` grid with longitudes `φ_j = 2πj / nphi`.
///
/// Latitude tables are stored per order `m` as row-major
/// `nlat x (lmax + 1 - m)` matrices of `Q_l^m(μ_i) s_i^m`.
#[derive(Debug, Clone)]
pub struct SphereGrid<S> {
    lmax: usize,
    nphi: usize,
    prec: Precision,
    mu: Vec<S>,
    /// Latitude weight times `2π / nphi`, for quadrature grids.
    weights: Option<Vec<S>>,
    legendre: Vec<Vec<S>>,
    cos_tab: Vec<S>,
    sin_tab: Vec<S>,
}

pub(crate) fn trig_tables(nphi: usize, prec: Precision) -> (Vec<BigInterval>, Vec<BigInterval>) {
    let two_pi = BigInterval::pi(prec) * BigInterval::from_i64(2, prec);
    let n = BigInterval::from_i64(nphi as i64, prec);
    let step = two_pi.try_div(&n).expect("nphi > 0");
    (0..nphi)
        .map(|q| {
            let a = step.clone() * BigInterval::from_i64(q as i64, prec);
            (a.cos(), a.sin())
        })
        .unzip()
}

impl<S: Scalar> SphereGrid<S> {
    fn assemble(
        lmax: usize,
        nphi: usize,
        prec: Precision,
        mu: Vec<S>,
        weights: Option<Vec<S>>,
        rows: Vec<Vec<S>>,
        cos_tab: Vec<S>,
        sin_tab: Vec<S>,
    ) -> Self {
        let nlat = mu.len();
        let legendre = (0..=lmax)
            .map(|m| {
                let nl = lmax + 1 - m;
                let mut mat = Vec::with_capacity(nlat * nl);
                for row in &rows {
                    mat.extend((m..=lmax).map(|l| row[tri(l, m)].clone()));
                }
                mat
            })
            .collect();
        SphereGrid {
            lmax,
            nphi,
            prec,
            mu,
            weights,
            legendre,
            cos_tab,
            sin_tab,
        }
    }

    /// Grid on the given colatitude enclosures. Tables are computed in MPFR
    /// at [`table_precision`] and rounded outward to `S`; `lat_weights`
    /// (Gauss weights in `μ`) turn the grid into a product quadrature rule.
    /// The recurrence amplifies input widths as much as rounding errors, so
    /// `mu` and `sin_theta` should be given at `table_precision` too.
    pub fn from_latitudes(
        lmax: usize,
        mu: &[BigInterval],
        sin_theta: &[BigInterval],
        lat_weights: Option<&[BigInterval]>,
        nphi: usize,
        prec: Precision,
    ) -> Result<Self, RigorError> {
        let hp = table_precision(prec, lmax);
        let coeffs = LegendreCoeffs::new(lmax, hp)?;
        let rows: Vec<Vec<S>> = par::map_range(mu.len(), |i| {
            coeffs.row(&mu[i], &sin_theta[i]).iter().map(S::from_big).collect()
        });
        let gp = prec.plus(64);
        let (c, s) = trig_tables(nphi, gp);
        let weights = match lat_weights {
            Some(w) => {
                let dphi = (BigInterval::pi(gp) * BigInterval::from_i64(2, gp))
                    .try_div(&BigInterval::from_i64(nphi as i64, gp))?;
                Some(w.iter().map(|w| S::from_big(&(w.clone() * &dphi))).collect())
            }
            None => None,
        };
        Ok(Self::assemble(
            lmax,
            nphi,
            prec,
            mu.iter().map(S::from_big).collect(),
            weights,
            rows,
            c.iter().map(S::from_big).collect(),
            s.iter().map(S::from_big).collect(),
        ))
    }

    /// Certified product rule with `k` Gauss latitudes and `2k` longitudes,
    /// exact for spherical polynomials of degree `<= 2k - 1`.
    pub fn gauss(lmax: usize, k: usize, prec: Precision) -> Result<Self, RigorError> {
        let rule = gauss_legendre(k, table_precision(prec, lmax))?;
        Self::from_latitudes(lmax, rule.mu(), rule.sin_theta(), Some(rule.weights()), 2 * k, prec)
    }

    /// Equiangular grid `θ_i = (i + 1/2) π / ntheta`, `φ_j = 2πj / nphi`
    /// (no quadrature weights).
    pub fn equiangular(lmax: usize, ntheta: usize, nphi: usize, prec: Precision) -> Result<Self, RigorError> {
        let gp = table_precision(prec, lmax);
        let pi = BigInterval::pi(gp);
        let nt = BigInterval::from_i64(2 * ntheta as i64, gp);
        let (mu, s): (Vec<_>, Vec<_>) = (0..ntheta)
            .map(|i| {
                let t = pi.clone() * BigInterval::from_i64(2 * i as i64 + 1, gp);
                let t = t.try_div(&nt).expect("ntheta > 0");
                (t.cos(), t.sin())
            })
            .unzip();
        Self::from_latitudes(lmax, &mu, &s, None, nphi, prec)
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn nlat(&self) -> usize {
        self.mu.len()
    }

    pub fn nphi(&self) -> usize {
        self.nphi
    }

    pub fn len(&self) -> usize {
        self.nlat() * self.nphi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    pub fn mu(&self) -> &[S] {
        &self.mu
    }

    pub fn weights(&self) -> Option<&[S]> {
        self.weights.as_deref()
    }

    /// Table of `Q_l^m(μ_i) s_i^m` for `l = m..=lmax` (row-major, `nlat` rows).
    pub fn legendre_table(&self, m: usize) -> &[S] {
        &self.legendre[m]
    }

    fn lat_weights(&self) -> &[S] {
        self.weights
            .as_deref()
            .expect("quadrature on a grid without weights")
    }

    /// Row-major `nphi x (2M + 1)` table with column `M + m` holding
    /// `cos(mφ_j)` (`m >= 0`) or `sin(|m|φ_j)` (`m < 0`).
    fn fourier_t(&self, mmax: usize) -> Vec<S> {
        let w = 2 * mmax + 1;
        let mut out = Vec::with_capacity(self.nphi * w);
        for j in 0..self.nphi {
            for c in 0..w {
                let m = c as i64 - mmax as i64;
                let q = (m.unsigned_abs() as usize * j) % self.nphi;
                out.push(if m >= 0 {
                    self.cos_tab[q].clone()
                } else {
                    self.sin_tab[q].clone()
                });
            }
        }
        out
    }

    /// Row-major `(2M + 1) x nphi` table: row `M + m` holds `cos(mφ_j)`
    /// (`m >= 0`) or `sin(|m|φ_j)` (`m < 0`).
    pub fn fourier(&self, mmax: usize) -> Vec<S> {
        let w = 2 * mmax + 1;
        let t = self.fourier_t(mmax);
        let mut out = Vec::with_capacity(t.len());
        for c in 0..w {
            out.extend((0..self.nphi).map(|j| t[j * w + c].clone()));
        }
        out
    }

    /// Latitude factors `a_m(μ_i) = Σ_l c_lm Q_l^|m| s^|m|` for `rows`.
    fn latitude_sums(&self, u: &CoeffFunction<S>, rows: Range<usize>) -> Vec<S> {
        let n = u.degree();
        assert!(n <= self.lmax, "degree {n} exceeds grid tables ({})", self.lmax);
        let w = 2 * n + 1;
        let r = rows.len();
        let mut a = vec![S::zero(self.prec); r * w];
        for m in -(n as i64)..=n as i64 {
            let am = m.unsigned_abs() as usize;
            let nl = self.lmax + 1 - am;
            let c: Vec<S> = (am..=self.lmax)
                .map(|l| {
                    if l <= n {
                        u.get(l, m).clone()
                    } else {
                        S::zero(self.prec)
                    }
                })
                .collect();
            let tab = &self.legendre[am][rows.start * nl..rows.end * nl];
            let col = S::matmul(tab, &c, r, nl, 1, self.prec);
            for (i, v) in col.into_iter().enumerate() {
                a[i * w + (m + n as i64) as usize] = v;
            }
        }
        a
    }

    /// Values of `u` on the latitude rows `rows`, row-major `rows.len() x nphi`.
    pub fn synthesize_rows(&self, u: &CoeffFunction<S>, rows: Range<usize>) -> Vec<S> {
        self.synthesize_rows_with(u, rows, &self.fourier(u.degree()))
    }

    fn synthesize_rows_with(&self, u: &CoeffFunction<S>, rows: Range<usize>, t: &[S]) -> Vec<S> {
        let n = u.degree();
        let r = rows.len();
        let a = self.latitude_sums(u, rows);
        S::matmul(&a, t, r, 2 * n + 1, self.nphi, self.prec)
    }

    /// Values of `u` on the whole grid.
    pub fn synthesize(&self, u: &CoeffFunction<S>) -> Vec<S> {
        let t = self.fourier(u.degree());
        let parts = par::map_chunks(self.nlat(), CHUNK, |r| self.synthesize_rows_with(u, r, &t));
        parts.into_iter().flatten().collect()
    }

    /// Streams `f(rows, values of each u on rows)` over row chunks, in order.
    pub fn map_rows<R, F>(&self, us: &[&CoeffFunction<S>], f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(Range<usize>, Vec<Vec<S>>) -> R + Sync + Send,
    {
        let tables: Vec<Vec<S>> = us.iter().map(|u| self.fourier(u.degree())).collect();
        par::map_chunks(self.nlat(), CHUNK, |r| {
            let vals = us
                .iter()
                .zip(&tables)
                .map(|(u, t)| self.synthesize_rows_with(u, r.clone(), t))
                .collect();
            f(r, vals)
        })
    }

    /// Contribution of the rows `rows` (values `vals`) to the coefficients
    /// of degree `<= degree`.
    fn analyze_part(&self, vals: &[S], rows: Range<usize>, degree: usize, ft: &[S]) -> Vec<S> {
        let r = rows.len();
        let w = 2 * degree + 1;
        let f = S::matmul(vals, ft, r, self.nphi, w, self.prec);
        let weights = &self.lat_weights()[rows.clone()];
        let mut out = vec![S::zero(self.prec); (degree + 1) * (degree + 1)];
        for m in -(degree as i64)..=degree as i64 {
            let am = m.unsigned_abs() as usize;
            let nl = self.lmax + 1 - am;
            let c = (m + degree as i64) as usize;
            let x: Vec<S> = (0..r).map(|i| f[i * w + c].clone() * &weights[i]).collect();
            let tab = &self.legendre[am][rows.start * nl..rows.end * nl];
            let proj = S::matmul(&x, tab, 1, r, nl, self.prec);
            for (t, v) in proj.into_iter().take(degree + 1 - am).enumerate() {
                out[index(am + t, m)] = v;
            }
        }
        out
    }

    /// Quadrature projection of grid values onto `Y_lm`, `l <= degree`.
    /// Exact when the product rule integrates `f Y_lm` exactly.
    pub fn analyze(&self, values: &[S], degree: usize) -> CoeffFunction<S> {
        let np = self.nphi;
        self.analyze_with(degree, |r| values[r.start * np..r.end * np].to_vec())
    }

    /// [`Self::analyze`] with values produced row-chunk by row-chunk.
    pub fn analyze_with<F>(&self, degree: usize, f: F) -> CoeffFunction<S>
    where
        F: Fn(Range<usize>) -> Vec<S> + Sync + Send,
    {
        assert!(degree <= self.lmax, "degree {degree} exceeds grid tables ({})", self.lmax);
        let ft = self.fourier_t(degree);
        let parts = par::map_chunks(self.nlat(), CHUNK, |r| {
            let vals = f(r.clone());
            self.analyze_part(&vals, r, degree, &ft)
        });
        let mut acc = vec![S::zero(self.prec); (degree + 1) * (degree + 1)];
        for p in parts {
            for (a, v) in acc.iter_mut().zip(&p) {
                *a += v;
            }
        }
        CoeffFunction::from_vec(degree, acc).expect("consistent length")
    }

    /// `∫_{S^2} f` by the product rule.
    pub fn integrate(&self, values: &[S]) -> S {
        let np = self.nphi;
        self.integrate_with(|r| values[r.start * np..r.end * np].to_vec())
    }

    pub fn integrate_with<F>(&self, f: F) -> S
    where
        F: Fn(Range<usize>) -> Vec<S> + Sync + Send,
    {
        let np = self.nphi;
        let parts = par::map_chunks(self.nlat(), CHUNK, |r| {
            let vals = f(r.clone());
            let w = &self.lat_weights()[r.clone()];
            let sums: Vec<S> = (0..r.len())
                .map(|i| {
                    let mut s = S::zero(self.prec);
                    for v in &vals[i * np..(i + 1) * np] {
                        s += v;
                    }
                    s
                })
                .collect();
            S::dot(&sums, w, self.prec)
        });
        let mut acc = S::zero(self.prec);
        for p in parts {
            acc += &p;
        }
        acc
    }

    /// `<f, Y_lm>` by the product rule.
    pub fn project_one(&self, values: &[S], l: usize, m: i64) -> S {
        assert!(l <= self.lmax && m.unsigned_abs() as usize <= l);
        let am = m.unsigned_abs() as usize;
        let nl = self.lmax + 1 - am;
        let np = self.nphi;
        let trig: Vec<S> = (0..np)
            .map(|j| {
                let q = (am * j) % np;
                if m >= 0 {
                    self.cos_tab[q].clone()
                } else {
                    self.sin_tab[q].clone()
                }
            })
            .collect();
        let w = self.lat_weights();
        let terms: Vec<S> = (0..self.nlat())
            .map(|i| {
                let f = S::dot(&values[i * np..(i + 1) * np], &trig, self.prec);
                f * &w[i] * &self.legendre[am][i * nl + (l - am)]
            })
            .collect();
        let mut acc = S::zero(self.prec);
        for t in &terms {
            acc += t;
        }
        acc
    }

    /// Galerkin matrix `G_ab = ∫ W Y_a Y_b` over `l_a, l_b <= degree`
    /// (row-major, indices `l^2 + l + m`), from grid values of `W`.
    /// Exact when the product rule integrates `W Y_a Y_b` exactly.
    pub fn galerkin(&self, w_values: &[S], degree: usize) -> Vec<S> {
        assert!(degree <= self.lmax);
        assert!(2 * degree < self.nphi, "too few longitudes for degree {degree}");
        let nlat = self.nlat();
        let np = self.nphi;
        let nq = 2 * degree + 1;
        // [C | S] with C_jq = cos(qφ_j), S_jq = sin(qφ_j), q = 0..=2 degree.
        let mut cs = Vec::with_capacity(np * 2 * nq);
        for j in 0..np {
            for q in 0..nq {
                cs.push(self.cos_tab[(q * j) % np].clone());
            }
            for q in 0..nq {
                cs.push(self.sin_tab[(q * j) % np].clone());
            }
        }
        let moments = S::matmul(w_values, &cs, nlat, np, 2 * nq, self.prec);
        let half = S::from_f64(0.5, self.prec);
        let wts = self.lat_weights();
        // Weighted moments C_i(q), S_i(q), scaled by 1/2 for product-to-sum.
        let cm: Vec<S> = (0..nlat * nq)
            .map(|t| moments[(t / nq) * 2 * nq + t % nq].clone() * &wts[t / nq] * &half)
            .collect();
        let sm: Vec<S> = (0..nlat * nq)
            .map(|t| moments[(t / nq) * 2 * nq + nq + t % nq].clone() * &wts[t / nq] * &half)
            .collect();
        let transposed: Vec<Vec<S>> = (0..=degree)
            .map(|m| {
                let nl = self.lmax + 1 - m;
                let tab = &self.legendre[m];
                let mut t = Vec::with_capacity(nlat * (degree + 1 - m));
                for l in 0..=degree - m {
                    t.extend((0..nlat).map(|i| tab[i * nl + l].clone()));
                }
                t
            })
            .collect();
        let orders: Vec<i64> = (-(degree as i64)..=degree as i64).collect();
        let pairs: Vec<(i64, i64)> = orders
            .iter()
            .flat_map(|&a| orders.iter().filter(move |&&b| b >= a).map(move |&b| (a, b)))
            .collect();
        let blocks = par::map_range(pairs.len(), |p| {
            let (ma, mb) = pairs[p];
            let (a, b) = (ma.unsigned_abs() as usize, mb.unsigned_abs() as usize);
            let (sum, dif) = (a + b, a.abs_diff(b));
            let tw: Vec<S> = (0..nlat)
                .map(|i| {
                    let c = |q: usize| &cm[i * nq + q];
                    let s = |q: usize| &sm[i * nq + q];
                    // S(a - b), using S(-q) = -S(q).
                    let sd = if a >= b { s(dif).clone() } else { -s(dif).clone() };
                    match (ma >= 0, mb >= 0) {
                        (true, true) => c(dif).clone() + c(sum),
                        (false, false) => c(dif).clone() - c(sum),
                        // cos aφ sin bφ = [sin (a+b)φ - sin (a-b)φ] / 2
                        (true, false) => s(sum).clone() - &sd,
                        // sin aφ cos bφ = [sin (a+b)φ + sin (a-b)φ] / 2
                        (false, true) => s(sum).clone() + &sd,
                    }
                })
                .collect();
            let nb = degree + 1 - b;
            let nlb = self.lmax + 1 - b;
            let tabb = &self.legendre[b];
            let mut right = Vec::with_capacity(nlat * nb);
            for i in 0..nlat {
                right.extend((0..nb).map(|l| tabb[i * nlb + l].clone() * &tw[i]));
            }
            let na = degree + 1 - a;
            S::matmul(&transposed[a], &right, na, nlat, nb, self.prec)
        });
        let dim = (degree + 1) * (degree + 1);
        let mut g = vec![S::zero(self.prec); dim * dim];
        for (p, block) in pairs.iter().zip(blocks) {
            let (ma, mb) = *p;
            let (a, b) = (ma.unsigned_abs() as usize, mb.unsigned_abs() as usize);
            let nb = degree + 1 - b;
            for (t, v) in block.into_iter().enumerate() {
                let (la, lb) = (a + t / nb, b + t % nb);
                let (ia, ib) = (index(la, ma), index(lb, mb));
                g[ia * dim + ib] = v.clone();
                g[ib * dim + ia] = v;
            }
        }
        g
    }
}

impl SphereGrid<f64> {
    /// Binary64 product rule (no enclosure claim), for the Newton solver.
    pub fn gauss_f64(lmax: usize, k: usize) -> Self {
        let (mu, w) = gauss_legendre_f64(k);
        let nphi = 2 * k;
        let rows = mu
            .iter()
            .map(|&x| row_f64(lmax, x, (1.0 - x * x).max(0.0).sqrt()))
            .collect();
        let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
        let (c, s) = (0..nphi)
            .map(|q| {
                let a = dphi * q as f64;
                (a.cos(), a.sin())
            })
            .unzip();
        Self::assemble(
            lmax,
            nphi,
            Precision::DOUBLE,
            mu,
            Some(w.iter().map(|w| w * dphi).collect()),
            rows,
            c,
            s,
        )
    }
}
