//! Lower bound for the smallest singular value of `𝓛 = Δ - V`,
//! `V = 2K e^{2u0}`, on `L^2(S^2)`.
//!
//! Split `u = u_≤L + u_>L`. On `H_≤L`, `𝓛` is the matrix
//! `A = diag(λ) - (∫ V Y_α Y_β)`, enclosed by quadrature and inverted with a
//! verified norm bound: `|A u| >= α_low |u|`. On `H_>L`,
//! `|𝓛 u| >= γ |u|` with `γ = λ(L+1) - ||V||_∞`. The off-diagonal blocks are
//! bounded by `η = ||V||_∞`. With the Schur complement bound
//! `s = α_low - η^2/γ > 0`, the block inverse is dominated entrywise by
//! `M = [[1/s, η/(sγ)], [η/(sγ), 1/γ + η^2/(γ^2 s)]]`, so
//! `||𝓛^{-1}|| <= α_inv = sqrt(|M|_1 |M|_∞)`.

use serde::{Deserialize, Serialize};

use crate::analysis::{taylor_tail, ProblemBounds};
use crate::harmonics::{coeff_count, degree_order, eigenvalue, CoeffFunction, SphereGrid};
use crate::quadrature::points_for_degree;
use crate::rigor::{Enclosure, IntervalMatrix, Precision};
use crate::Error;

/// `V_p = 2K E_p(2u0)` projected onto degree `<= degree`, exactly by a
/// Gauss product rule.
pub fn potential_projection<S: Enclosure>(
    u0: &CoeffFunction<S>,
    k: &CoeffFunction<S>,
    p: usize,
    degree: usize,
) -> Result<CoeffFunction<S>, Error> {
    let prec = u0.precision();
    let deg_v = p * u0.degree() + k.degree();
    let kpts = points_for_degree(deg_v + degree);
    let lmax = u0.degree().max(k.degree()).max(degree);
    let grid = SphereGrid::<S>::gauss(lmax, kpts, prec)?;
    let mut inv_fact = vec![S::one(prec)];
    for j in 1..=p {
        let next = inv_fact[j - 1].try_div(&S::from_i64(j as i64, prec))?;
        inv_fact.push(next);
    }
    Ok(grid.analyze_with(degree, |rows| {
        let uv = grid.synthesize_rows(u0, rows.clone());
        let kv = grid.synthesize_rows(k, rows);
        uv.iter()
            .zip(&kv)
            .map(|(u, kk)| {
                let x = u.mul_f64(2.0);
                let mut e = inv_fact[p].clone();
                for c in inv_fact.iter().rev().skip(1) {
                    e = e * &x + c;
                }
                (kk.clone() * &e).mul_f64(2.0)
            })
            .collect()
    }))
}

/// Enclosure of the Galerkin block of `𝓛` on `H_≤L` (basis ordered by
/// `l` then `m`). The Taylor remainder of `V - V_p` adds
/// `2 K̄ e^{2ū} (2ū)^{p+1}/(p+1)!` to every entry, since
/// `||Y_α Y_β||_{L^1} <= 1`.
pub fn assemble_a<S: Enclosure>(
    u0: &CoeffFunction<S>,
    k: &CoeffFunction<S>,
    l_cut: usize,
    p: usize,
    k_sup: &S,
    u0_sup: &S,
) -> Result<IntervalMatrix<S>, Error> {
    let prec = u0.precision();
    let v = potential_projection(u0, k, p, 2 * l_cut)?;
    let small = SphereGrid::<S>::gauss(2 * l_cut, 2 * l_cut + 1, prec)?;
    let g = small.galerkin(&small.synthesize(&v), l_cut);
    let tail = (k_sup.mul_f64(2.0) * taylor_tail(&u0_sup.mul_f64(2.0), p)?).hi_f64();
    let slack = S::from_bounds(-tail, tail, prec);
    let dim = coeff_count(l_cut);
    Ok(IntervalMatrix::from_fn(dim, dim, |i, j| {
        let lap = if i == j { eigenvalue(degree_order(i).0) as i64 } else { 0 };
        S::from_i64(lap, prec) - &g[i * dim + j] + &slack
    }))
}

/// `γ = λ(L+1) - V̄ = (L+1)(L+2) - V̄`, required positive.
pub fn d_lower_bound<S: Enclosure>(l_cut: usize, v_sup: &S) -> Result<S, Error> {
    let prec = v_sup.precision();
    let gamma = S::from_i64(eigenvalue(l_cut + 1) as i64, prec) - v_sup;
    if gamma.lo_f64() > 0.0 {
        Ok(gamma)
    } else {
        Err(Error::NotPositive { what: "gamma (cutoff too small)", lower: gamma.lo_f64() })
    }
}

/// `(||A^{-1}||_2 bound, α_low = 1 / bound)`.
pub fn a_lower_bound<S: Enclosure>(a: &IntervalMatrix<S>) -> Result<(S, S), Error> {
    let inv = a.verified_inverse_2norm_bound()?;
    let alpha = S::one(a.precision()).try_div(&inv.bound)?;
    Ok((inv.bound, alpha))
}

/// `(s, α_inv)` from `α_low`, `η` and `γ`. `M` is symmetric with positive
/// entries, so `sqrt(|M|_1 |M|_∞)` is its largest row sum.
pub fn schur_and_alpha_inv<S: Enclosure>(alpha_low: &S, eta: &S, gamma: &S) -> Result<(S, S), Error> {
    let prec = alpha_low.precision();
    let (a, e, g) = (alpha_low, eta, gamma);
    let s = a.clone() - e.sqr().try_div(g)?;
    if s.lo_f64() <= 0.0 {
        return Err(Error::NotPositive { what: "Schur complement bound s", lower: s.lo_f64() });
    }
    let one = S::one(prec);
    let m00 = one.try_div(&s)?;
    let m01 = e.try_div(&(s.clone() * g))?;
    let m11 = one.try_div(g)? + e.sqr().try_div(&(g.sqr() * &s))?;
    let inv = (m00 + &m01).max(&(m01 + &m11));
    Ok((s, inv))
}

/// `(C_1, C_2) = (√2, 1 + √2 V̄)` with
/// `||u||_{H^2} <= C_1 ||𝓛u|| + C_2 ||u||`.
pub fn a_priori_constants<S: Enclosure>(v_sup: &S) -> Result<(S, S), Error> {
    let prec = v_sup.precision();
    let r2 = S::from_i64(2, prec).try_sqrt()?;
    let c2 = S::one(prec) + r2.clone() * v_sup;
    Ok((r2, c2))
}

/// `C_inj = C_1 + C_2 α_inv`, so `||u||_{H^2} <= C_inj ||𝓛 u||`.
pub fn injectivity_constant<S: Enclosure>(c1: &S, c2: &S, alpha_inv: &S) -> S {
    c1.clone() + c2.clone() * alpha_inv
}

/// Smallest `L` with `λ(L+1) >= 40 V̄`.
pub fn default_cutoff(v_sup: f64) -> usize {
    (0..).find(|&l| eigenvalue(l + 1) as f64 >= 40.0 * v_sup).expect("unbounded search")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBoundReport<S> {
    pub l_cut: usize,
    pub gamma: S,
    pub a_inv_bound: S,
    pub alpha_low: S,
    pub eta: S,
    pub s: S,
    pub alpha_inv: S,
    pub c_priori_1: S,
    pub c_priori_2: S,
    pub c_injectivity: S,
}

/// `α_inv`, the a priori constants and `C_inj` from `||A^{-1}||` and the
/// upstream bounds; shared by [`spectral_bounds`] and table replays.
pub fn spectral_chain<S: Enclosure>(l_cut: usize, a_inv_bound: &S, v_sup: &S) -> Result<SpectralBoundReport<S>, Error> {
    let prec = v_sup.precision();
    let gamma = d_lower_bound(l_cut, v_sup)?;
    let alpha_low = S::one(prec).try_div(a_inv_bound)?;
    let eta = v_sup.clone();
    let (s, alpha_inv) = schur_and_alpha_inv(&alpha_low, &eta, &gamma)?;
    let (c1, c2) = a_priori_constants(v_sup)?;
    let c_inj = injectivity_constant(&c1, &c2, &alpha_inv);
    Ok(SpectralBoundReport {
        l_cut,
        gamma,
        a_inv_bound: a_inv_bound.clone(),
        alpha_low,
        eta,
        s,
        alpha_inv,
        c_priori_1: c1,
        c_priori_2: c2,
        c_injectivity: c_inj,
    })
}

/// The spectral stage: assemble and invert `A`, then the block bound.
pub fn spectral_bounds<S: Enclosure>(
    u0: &CoeffFunction<S>,
    k: &CoeffFunction<S>,
    l_cut: usize,
    p: usize,
    bounds: &ProblemBounds<S>,
) -> Result<SpectralBoundReport<S>, Error> {
    d_lower_bound(l_cut, &bounds.v_sup)?;
    let a = assemble_a(u0, k, l_cut, p, &bounds.k_sup, &bounds.u0_sup)?;
    let (inv, _) = a_lower_bound(&a)?;
    spectral_chain(l_cut, &inv, &bounds.v_sup)
}

/// Working precision of a report (for callers holding only the report).
pub fn report_precision<S: Enclosure>(r: &SpectralBoundReport<S>) -> Precision {
    r.gamma.precision()
}
