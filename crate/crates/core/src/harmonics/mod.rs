//! Real orthonormal spherical harmonics and functions given by their
//! coefficients.
//!
//! Coefficients are indexed by `l^2 + l + m`. The basis is
//! `Y_lm = N_l|m| P_l^|m|(cos θ) {cos mφ, m >= 0; sin |m|φ, m < 0}` with
//! positive normalisation (no Condon–Shortley phase), orthonormal in
//! `L^2(S^2)`, and `Δ Y_lm = l(l + 1) Y_lm` for the nonnegative Laplacian.

mod grid;
mod io;
pub mod legendre;

use serde::{Deserialize, Serialize};

pub use grid::SphereGrid;
pub(crate) use grid::trig_tables;
pub use io::{read_coeffs, write_coeffs, CoeffFile, CoeffMode};

use crate::rigor::{BigInterval, Enclosure, Precision, RigorError, Scalar};
use crate::Error;
use legendre::{table_precision, LegendreCoeffs};

/// Flat index of `(l, m)`.
pub fn index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`index`].
pub fn degree_order(i: usize) -> (usize, i64) {
    let l = (i as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= i { l + 1 } else if l * l > i { l - 1 } else { l };
    (l, i as i64 - (l * l + l) as i64)
}

/// Number of coefficients up to degree `n`.
pub fn coeff_count(n: usize) -> usize {
    (n + 1) * (n + 1)
}

/// Eigenvalue `l(l + 1)` of the nonnegative Laplacian.
pub fn eigenvalue(l: usize) -> usize {
    l * (l + 1)
}

/// A spherical polynomial `Σ_{l <= degree} c_lm Y_lm`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffFunction<S> {
    degree: usize,
    coeffs: Vec<S>,
}

/// An equiangular sample grid of `ntheta x nphi` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Samples {
    pub ntheta: usize,
    pub nphi: usize,
}

impl Samples {
    pub fn new(ntheta: usize, nphi: usize) -> Self {
        Samples { ntheta, nphi }
    }

    /// A grid resolving degree-`n` functions with spacing well below their
    /// wavelength.
    pub fn for_degree(n: usize) -> Self {
        Samples { ntheta: 4 * n + 8, nphi: 8 * n + 16 }
    }
}

/// A point on the unit sphere by colatitude and longitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
}

impl SpherePoint {
    pub fn new(theta: f64, phi: f64) -> Self {
        SpherePoint { theta, phi }
    }

    /// Enclosure of the Cartesian coordinates.
    pub fn cartesian(&self, prec: Precision) -> [BigInterval; 3] {
        let t = BigInterval::from_f64(self.theta, prec);
        let p = BigInterval::from_f64(self.phi, prec);
        let s = t.sin();
        [s.clone() * p.cos(), s * p.sin(), t.cos()]
    }
}

impl<S: Scalar> CoeffFunction<S> {
    pub fn from_vec(degree: usize, coeffs: Vec<S>) -> Result<Self, Error> {
        if coeffs.len() != coeff_count(degree) {
            return Err(Error::Shape(format!(
                "{} coefficients for degree {degree} (expected {})",
                coeffs.len(),
                coeff_count(degree)
            )));
        }
        Ok(CoeffFunction { degree, coeffs })
    }

    pub fn zeros(degree: usize, prec: Precision) -> Self {
        CoeffFunction {
            degree,
            coeffs: vec![S::zero(prec); coeff_count(degree)],
        }
    }

    /// Exact conversion of binary64 coefficients.
    pub fn from_f64(degree: usize, c: &[f64], prec: Precision) -> Result<Self, Error> {
        Self::from_vec(degree, c.iter().map(|&x| S::from_f64(x, prec)).collect())
    }

    /// A single basis function `Y_lm`.
    pub fn basis(degree: usize, l: usize, m: i64, prec: Precision) -> Self {
        let mut u = Self::zeros(degree, prec);
        u.set(l, m, S::one(prec));
        u
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    pub fn precision(&self) -> Precision {
        self.coeffs[0].precision()
    }

    pub fn get(&self, l: usize, m: i64) -> &S {
        &self.coeffs[index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: S) {
        self.coeffs[index(l, m)] = v;
    }

    /// `Δu`, multiplying each coefficient by `l(l + 1)`.
    pub fn laplacian(&self) -> Self {
        let prec = self.precision();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (l, _) = degree_order(i);
                c.clone() * S::from_i64(eigenvalue(l) as i64, prec)
            })
            .collect();
        CoeffFunction {
            degree: self.degree,
            coeffs,
        }
    }

    /// Zero-padded or truncated copy of degree `n`.
    pub fn with_degree(&self, n: usize) -> Self {
        let prec = self.precision();
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(coeff_count(n), S::zero(prec));
        CoeffFunction { degree: n, coeffs }
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.degree.max(o.degree);
        let (a, b) = (self.with_degree(n), o.with_degree(n));
        let coeffs = a.coeffs.into_iter().zip(&b.coeffs).map(|(x, y)| x + y).collect();
        CoeffFunction { degree: n, coeffs }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.degree.max(o.degree);
        let (a, b) = (self.with_degree(n), o.with_degree(n));
        let coeffs = a.coeffs.into_iter().zip(&b.coeffs).map(|(x, y)| x - y).collect();
        CoeffFunction { degree: n, coeffs }
    }

    pub fn scale(&self, k: &S) -> Self {
        CoeffFunction {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.clone() * k).collect(),
        }
    }

    /// Per-degree Euclidean norms `|c_l|_2`.
    pub fn block_norms(&self) -> Vec<S> {
        (0..=self.degree)
            .map(|l| {
                let block = &self.coeffs[l * l..(l + 1) * (l + 1)];
                S::dot(block, block, self.precision())
                    .max(&S::zero(self.precision()))
                    .try_sqrt()
                    .expect("sum of squares is nonnegative")
            })
            .collect()
    }

    /// `||u||_{L^2}` (Parseval).
    pub fn l2_norm(&self) -> S {
        S::dot(&self.coeffs, &self.coeffs, self.precision())
            .max(&S::zero(self.precision()))
            .try_sqrt()
            .expect("sum of squares is nonnegative")
    }

    /// `sup |∇u| <= Σ_l |c_l|_2 sqrt(l(l+1)(2l+1) / 4π)`, from the vector
    /// addition identity `Σ_m |∇Y_lm|^2 = l(l+1)(2l+1)/4π`.
    pub fn gradient_norm_bound(&self) -> S {
        self.weighted_block_sum(|l| (l * (l + 1) * (2 * l + 1)) as i64)
    }

    /// `sup |u| <= Σ_l |c_l|_2 sqrt((2l+1) / 4π)` (addition theorem); cruder
    /// than [`CoeffFunction::sup_norm_bound`] but free.
    pub fn addition_sup_bound(&self) -> S {
        self.weighted_block_sum(|l| (2 * l + 1) as i64)
    }

    fn weighted_block_sum(&self, f: impl Fn(usize) -> i64) -> S {
        let prec = self.precision();
        let four_pi = S::pi(prec) * S::from_i64(4, prec);
        let mut acc = S::zero(prec);
        for (l, b) in self.block_norms().into_iter().enumerate() {
            let w = S::from_i64(f(l), prec)
                .try_div(&four_pi)
                .and_then(|x| x.try_sqrt())
                .expect("positive weight");
            acc += &(b * w);
        }
        acc
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> CoeffFunction<T> {
        CoeffFunction {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Binary64 representatives (interval midpoints).
    pub fn midpoints(&self) -> CoeffFunction<f64> {
        self.map(|c| c.mid())
    }
}

impl<S: Enclosure> CoeffFunction<S> {
    /// Outward conversion to another enclosure type.
    pub fn convert<T: Enclosure>(&self) -> CoeffFunction<T> {
        self.map(|c| T::from_big(&c.to_big()))
    }

    /// Enclosures of `u` at arbitrary points, evaluated in MPFR.
    pub fn evaluate_on_points(&self, points: &[SpherePoint]) -> Result<Vec<S>, RigorError> {
        let prec = table_precision(self.precision(), self.degree);
        let coeffs = LegendreCoeffs::new(self.degree, prec)?;
        let c: Vec<BigInterval> = self.coeffs.iter().map(|x| x.to_big()).collect();
        Ok(crate::par::map_range(points.len(), |i| {
            let [x, y, z] = points[i].cartesian(prec);
            let ys = legendre::ylm_cartesian(&coeffs, &x, &y, &z);
            let mut acc = BigInterval::zero(prec);
            for (a, b) in c.iter().zip(&ys) {
                acc += &(a.clone() * b);
            }
            S::from_big(&acc)
        }))
    }

    /// Values on the nodes of a product grid (row-major, latitude-major).
    pub fn evaluate_on_grid(&self, grid: &SphereGrid<S>) -> Vec<S> {
        grid.synthesize(self)
    }

    /// Rigorous `sup |u|` by the Lipschitz method on the equiangular
    /// `ntheta x nphi` grid: every point is within geodesic distance `h` of a
    /// node, with `sin^2(h/2) <= sin^2(π/(4 ntheta)) + sin^2(π/(2 nphi))`
    /// (haversine formula), so `sup |u| <= max_nodes |u| + h sup |∇u|`.
    pub fn sup_norm_bound(&self, ntheta: usize, nphi: usize) -> Result<S, RigorError> {
        let prec = self.precision();
        let grid = SphereGrid::<S>::equiangular(self.degree, ntheta, nphi, prec)?;
        let maxima = grid.map_rows(&[self], |_, v| {
            v[0].iter().fold(S::zero(prec), |m, x| m.max(&x.abs()))
        });
        let best = maxima.iter().fold(S::zero(prec), |m, x| m.max(x));
        let h = covering_radius::<S>(ntheta, nphi, prec)?;
        Ok((best.upper() + h * self.gradient_norm_bound()).upper())
    }
}

/// Upper bound on the distance from any point of the sphere to the nearest
/// node of the equiangular `ntheta x nphi` grid.
pub fn covering_radius<S: Enclosure>(ntheta: usize, nphi: usize, prec: Precision) -> Result<S, RigorError> {
    let pi = S::pi(prec);
    let a = pi.clone().try_div(&S::from_i64(4 * ntheta as i64, prec))?;
    let b = pi.try_div(&S::from_i64(2 * nphi as i64, prec))?;
    let sa = S::from_big(&a.to_big().sin());
    let sb = S::from_big(&b.to_big().sin());
    let x = (sa.sqr() + sb.sqr()).try_sqrt()?;
    // asin x = atan(x / sqrt(1 - x^2)) <= x / sqrt(1 - x^2)
    let asin_up = x.clone().try_div(&(S::one(prec) - x.sqr()).try_sqrt()?)?;
    Ok((asin_up * S::from_i64(2, prec)).upper())
}

/// `Y_lm` at a point, enclosed at `prec` bits.
pub fn eval_ylm(l: usize, m: i64, p: SpherePoint, prec: Precision) -> Result<BigInterval, RigorError> {
    let hp = table_precision(prec, l);
    let coeffs = LegendreCoeffs::new(l, hp)?;
    let [x, y, z] = p.cartesian(hp);
    let ys = legendre::ylm_cartesian(&coeffs, &x, &y, &z);
    Ok(ys[index(l, m)].round_to(prec))
}
