//! Dense interval matrices and the verified bound on `||A^{-1}||_2`.

use nalgebra::DMatrix;

use super::{Enclosure, Precision, RigorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Maximum column sum.
    One,
    /// Maximum row sum.
    Inf,
}

/// Row-major dense matrix of enclosures.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

/// Result of [`IntervalMatrix::verified_inverse_2norm_bound`]; the upper
/// endpoints are the certified bounds.
#[derive(Debug, Clone)]
pub struct InverseBound<S> {
    /// Encloses a value no smaller than `||P^{-1}||_2` for every member `P`.
    pub bound: S,
    /// Upper bound on `sqrt(||E||_1 ||E||_inf)` with `E = I - B A`.
    pub e_norm: S,
    /// Upper bound on `sqrt(||B||_1 ||B||_inf)`.
    pub b_norm: S,
}

impl<S: Enclosure> IntervalMatrix<S> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self, RigorError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(RigorError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(IntervalMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> S) -> Self {
        let mut f = f;
        let data = (0..rows * cols).map(|t| f(t / cols, t % cols)).collect();
        IntervalMatrix { rows, cols, data }
    }

    /// Zero-width matrix with the given point entries.
    pub fn from_point(m: &DMatrix<f64>, prec: Precision) -> Self {
        IntervalMatrix::from_fn(m.nrows(), m.ncols(), |i, j| S::from_f64(m[(i, j)], prec))
    }

    pub fn identity(n: usize, prec: Precision) -> Self {
        IntervalMatrix::from_fn(n, n, |i, j| S::from_f64(if i == j { 1.0 } else { 0.0 }, prec))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn precision(&self) -> Precision {
        self.data[0].precision()
    }

    pub fn transpose(&self) -> Self {
        IntervalMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Matrix of interval midpoints.
    pub fn midpoint(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mid())
    }

    /// Rigorous product with another interval matrix.
    pub fn mul(&self, o: &Self) -> Result<Self, RigorError> {
        if self.cols != o.rows {
            return Err(RigorError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let prec = self.precision();
        let data = S::matmul(&self.data, &o.data, self.rows, self.cols, o.cols, prec);
        Ok(IntervalMatrix {
            rows: self.rows,
            cols: o.cols,
            data,
        })
    }

    /// Upper bound on the 1- or infinity-norm over all member matrices.
    pub fn norm_bound(&self, which: NormKind) -> S {
        let prec = self.precision();
        let (outer, inner) = match which {
            NormKind::One => (self.cols, self.rows),
            NormKind::Inf => (self.rows, self.cols),
        };
        let mut best = S::zero(prec);
        for a in 0..outer {
            let mut sum = S::zero(prec);
            for b in 0..inner {
                let x = match which {
                    NormKind::One => self.get(b, a),
                    NormKind::Inf => self.get(a, b),
                };
                sum += &x.abs();
            }
            best = best.max(&sum);
        }
        best.upper()
    }

    /// Upper bound on the 2-norm via `sqrt(||.||_1 ||.||_inf)`.
    pub fn norm2_bound(&self) -> S {
        let p = self.norm_bound(NormKind::One) * self.norm_bound(NormKind::Inf);
        p.try_sqrt().expect("norm product is nonnegative").upper()
    }

    /// Approximate inverse of the midpoint matrix (no enclosure claim).
    pub fn midpoint_inverse(&self) -> Result<DMatrix<f64>, RigorError> {
        if self.rows != self.cols {
            return Err(RigorError::ShapeMismatch("midpoint inverse of a non-square matrix".into()));
        }
        let inv = self.midpoint().try_inverse().ok_or(RigorError::MidpointInverseFailed)?;
        if inv.iter().all(|x| x.is_finite()) {
            Ok(inv)
        } else {
            Err(RigorError::MidpointInverseFailed)
        }
    }

    /// Certified upper bound on `||P^{-1}||_2` for every member `P`: with
    /// `B = m(A)^{-1}` and `E = I - B A`, a Neumann-series argument gives
    /// `||A^{-1}|| <= ||B|| / (1 - ||E||)` once `||E|| < 1`.
    pub fn verified_inverse_2norm_bound(&self) -> Result<InverseBound<S>, RigorError> {
        let prec = self.precision();
        let b = self.midpoint_inverse()?;
        let bm = IntervalMatrix::<S>::from_point(&b, prec);
        let ba = bm.mul(self)?;
        let n = self.rows;
        let e = IntervalMatrix::from_fn(n, n, |i, j| {
            let id = S::from_f64(if i == j { 1.0 } else { 0.0 }, prec);
            id - ba.get(i, j)
        });
        let e_norm = e.norm2_bound();
        let b_norm = bm.norm2_bound();
        if !(e_norm.hi_f64() < 1.0) {
            return Err(RigorError::InverseNotCertified(e_norm.hi_f64()));
        }
        let denom = S::one(prec) - &e_norm;
        let bound = b_norm.try_div(&denom)?.upper();
        Ok(InverseBound { bound, e_norm, b_norm })
    }
}
