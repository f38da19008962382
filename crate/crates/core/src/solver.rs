//! Binary64 Newton solver for `1 + Δu - K e^{2u} = 0` in coefficient space.
//! Nothing here is rigorous; candidates are validated afterwards.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::harmonics::{coeff_count, degree_order, eigenvalue, CoeffFunction, SphereGrid};
use crate::par;
use crate::rigor::Precision;
use crate::symmetry::{symmetrize, GroupName, SymmetryGroup};
use crate::Error;

/// Starting point of a Newton run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seed {
    /// Gaussian coefficients, decaying with degree.
    Random,
    /// Gaussian coefficients averaged over a group, plus a multiple of `K`.
    Symmetric(GroupName),
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seed::Random => f.write_str("random"),
            Seed::Symmetric(g) => write!(f, "{g}"),
        }
    }
}

impl FromStr for Seed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.eq_ignore_ascii_case("random") {
            Ok(Seed::Random)
        } else {
            s.parse().map(Seed::Symmetric)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub degree: usize,
    /// Gauss latitudes of the collocation grid; `2 degree + 2` when absent.
    pub quad_points: Option<usize>,
    pub max_iter: usize,
    /// Step multiplier applied while the residual does not decrease.
    pub damping: f64,
    /// Target for the coefficient 2-norm of `F(u)`.
    pub tol: f64,
    pub seed: Seed,
    pub rng_seed: u64,
    /// Size of the random part of the seed.
    pub amplitude: f64,
    /// Multiple of `K` added to symmetric seeds.
    pub k_weight: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            degree: 24,
            quad_points: None,
            max_iter: 60,
            damping: 0.5,
            tol: 1e-11,
            seed: Seed::Symmetric(GroupName::Td),
            rng_seed: 0,
            amplitude: 2.0,
            k_weight: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: CoeffFunction<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub seed: Seed,
    pub rng_seed: u64,
}

/// Evaluates `F` and its Jacobian on one collocation grid.
struct Problem {
    grid: SphereGrid<f64>,
    degree: usize,
    k_values: Vec<f64>,
}

impl Problem {
    fn new(k: &CoeffFunction<f64>, config: &SolverConfig) -> Result<Self, Error> {
        let degree = config.degree;
        if degree < 3 || degree < k.degree() {
            return Err(Error::Config(format!("degree {degree} must be at least 3 and at least deg K")));
        }
        let nq = config.quad_points.unwrap_or(2 * degree + 2);
        if nq <= degree {
            return Err(Error::Config(format!("{nq} latitudes are too few for degree {degree}")));
        }
        let grid = SphereGrid::gauss_f64(degree, nq);
        let k_values = grid.synthesize(&k.with_degree(degree));
        Ok(Problem { grid, degree, k_values })
    }

    /// `K e^{2u}` on the grid.
    fn nonlinearity(&self, u: &CoeffFunction<f64>) -> Vec<f64> {
        let uv = self.grid.synthesize(u);
        uv.iter().zip(&self.k_values).map(|(u, k)| k * (2.0 * u).exp()).collect()
    }

    fn residual(&self, u: &CoeffFunction<f64>) -> (Vec<f64>, Vec<f64>) {
        let w = self.nonlinearity(u);
        let proj = self.grid.analyze(&w, self.degree);
        let mut f: Vec<f64> = u
            .coeffs()
            .iter()
            .zip(proj.coeffs())
            .enumerate()
            .map(|(i, (c, p))| eigenvalue(degree_order(i).0) as f64 * c - p)
            .collect();
        f[0] += 2.0 * PI.sqrt();
        (f, w)
    }

    /// `diag(l(l+1)) - Galerkin(2 K e^{2u})`.
    fn jacobian(&self, w: &[f64]) -> DMatrix<f64> {
        let dim = coeff_count(self.degree);
        let two_w: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        let g = self.grid.galerkin(&two_w, self.degree);
        DMatrix::from_fn(dim, dim, |i, j| {
            let d = if i == j { eigenvalue(degree_order(i).0) as f64 } else { 0.0 };
            d - g[i * dim + j]
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The initial iterate for `config.seed`.
pub fn seed_function(k: &CoeffFunction<f64>, config: &SolverConfig) -> Result<CoeffFunction<f64>, Error> {
    let n = config.degree;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let coeffs: Vec<f64> = (0..coeff_count(n))
        .map(|i| {
            let l = degree_order(i).0 as f64;
            let z: f64 = StandardNormal.sample(&mut rng);
            config.amplitude * z / (1.0 + l).powi(2)
        })
        .collect();
    let random = CoeffFunction::from_vec(n, coeffs)?;
    Ok(match config.seed {
        Seed::Random => random,
        Seed::Symmetric(g) => {
            let s = symmetrize(&random, &SymmetryGroup::new(g))?;
            s.add(&k.with_degree(n).scale(&config.k_weight))
        }
    })
}

/// Damped Newton iteration from `u`.
pub fn newton(k: &CoeffFunction<f64>, u: CoeffFunction<f64>, config: &SolverConfig) -> Result<Solution, Error> {
    let problem = Problem::new(k, config)?;
    let mut u = u.with_degree(config.degree);
    let (mut f, mut w) = problem.residual(&u);
    let mut res = norm(&f);
    for it in 0..config.max_iter {
        if res <= config.tol {
            return Ok(Solution { u, residual: res, iterations: it, seed: config.seed, rng_seed: config.rng_seed });
        }
        let j = problem.jacobian(&w);
        let rhs = DVector::from_iterator(f.len(), f.iter().map(|x| -x));
        let Some(delta) = j.lu().solve(&rhs) else {
            return Err(diverged(it, res, u));
        };
        let mut t = 1.0;
        loop {
            let step: Vec<f64> = delta.iter().map(|d| t * d).collect();
            let trial = u.add(&CoeffFunction::from_vec(config.degree, step)?);
            let (ft, wt) = problem.residual(&trial);
            let rt = norm(&ft);
            if rt < res {
                debug!("newton {it}: |F| {res:.3e} -> {rt:.3e} (step {t})");
                (u, f, w, res) = (trial, ft, wt, rt);
                break;
            }
            t *= config.damping;
            if t < 1e-6 {
                return Err(diverged(it, res, u));
            }
        }
    }
    if res <= config.tol {
        return Ok(Solution { u, residual: res, iterations: config.max_iter, seed: config.seed, rng_seed: config.rng_seed });
    }
    Err(diverged(config.max_iter, res, u))
}

fn diverged(iterations: usize, residual: f64, last: CoeffFunction<f64>) -> Error {
    Error::Diverged { iterations, residual, last: Box::new(last) }
}

/// Seeds per `config` and runs [`newton`].
pub fn solve(k: &CoeffFunction<f64>, config: &SolverConfig) -> Result<Solution, Error> {
    let u = seed_function(k, config)?;
    newton(k, u, config)
}

/// Degree of the coarse search in [`solve_branch`].
pub const COARSE_DEGREE: usize = 16;

/// A solution whose diagnosed symmetry is `group` (any for `trivial`): seeds
/// symmetrically over `group` and tries RNG seeds `config.rng_seed, +1, ...` at degree `min(N, 16)`, then
/// prolongs the first matching solution and polishes it at degree `N`.
pub fn solve_branch(
    k: &CoeffFunction<f64>,
    config: &SolverConfig,
    group: GroupName,
    attempts: usize,
) -> Result<Solution, Error> {
    let seed = match group {
        GroupName::Trivial => config.seed,
        g => Seed::Symmetric(g),
    };
    let coarse = SolverConfig { degree: config.degree.min(COARSE_DEGREE).max(k.degree()), seed, ..config.clone() };
    let mut last = None;
    for i in 0..attempts.max(1) as u64 {
        let cfg = SolverConfig { rng_seed: config.rng_seed + i, ..coarse.clone() };
        let sol = match solve(k, &cfg) {
            Ok(s) => s,
            Err(e) => {
                last = Some(e);
                continue;
            }
        };
        let sym = symmetry_diagnosis(&sol.u, 1e-8)?;
        if group != GroupName::Trivial && sym != group {
            debug!("rng seed {} gave a {sym} candidate", cfg.rng_seed);
            continue;
        }
        if coarse.degree == config.degree {
            return Ok(sol);
        }
        let fine = SolverConfig { rng_seed: cfg.rng_seed, seed, ..config.clone() };
        return newton(k, sol.u, &fine);
    }
    Err(last.unwrap_or_else(|| Error::Config(format!("no {group} candidate in {attempts} attempts"))))
}

/// `||F(u)||` in coefficient space on the collocation grid of `config`.
pub fn residual_estimate(k: &CoeffFunction<f64>, u: &CoeffFunction<f64>, config: &SolverConfig) -> Result<f64, Error> {
    let problem = Problem::new(k, config)?;
    Ok(norm(&problem.residual(&u.with_degree(config.degree)).0))
}

/// The largest of `Td`, `S3`, `trivial` whose average moves `u` by less
/// than `tol` (relative).
pub fn symmetry_diagnosis(u: &CoeffFunction<f64>, tol: f64) -> Result<GroupName, Error> {
    let scale = norm(u.coeffs()).max(1.0);
    for g in [GroupName::Td, GroupName::S3] {
        let s = symmetrize(u, &SymmetryGroup::new(g))?;
        if norm(u.sub(&s).coeffs()) <= tol * scale {
            return Ok(g);
        }
    }
    Ok(GroupName::Trivial)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub solution: Solution,
    pub symmetry: GroupName,
    /// Number of starts that converged to this candidate.
    pub hits: usize,
}

/// Runs `n_starts` solves with seeds cycling through `seeds` and RNG seeds
/// `config.rng_seed + i`; converged results closer than `dedup_tol`
/// (relative coefficient distance) are merged.
pub fn multistart(
    k: &CoeffFunction<f64>,
    config: &SolverConfig,
    seeds: &[Seed],
    n_starts: usize,
    dedup_tol: f64,
) -> Result<Vec<Candidate>, Error> {
    if n_starts == 0 || seeds.is_empty() {
        return Err(Error::Config("multistart needs at least one start and one seed".into()));
    }
    let runs = par::map_range(n_starts, |i| {
        let cfg = SolverConfig { seed: seeds[i % seeds.len()], rng_seed: config.rng_seed + i as u64, ..config.clone() };
        solve(k, &cfg)
    });
    let mut out: Vec<Candidate> = Vec::new();
    for run in runs {
        let Ok(sol) = run else { continue };
        let scale = norm(sol.u.coeffs()).max(1.0);
        if let Some(c) = out.iter_mut().find(|c| norm(c.solution.u.sub(&sol.u).coeffs()) <= dedup_tol * scale) {
            c.hits += 1;
            continue;
        }
        let symmetry = symmetry_diagnosis(&sol.u, 1e-8)?;
        out.push(Candidate { solution: sol, symmetry, hits: 1 });
    }
    Ok(out)
}

/// `K ≡ 1` as a coefficient function of degree `n`.
pub fn constant_curvature(n: usize) -> CoeffFunction<f64> {
    let mut k = CoeffFunction::zeros(n, Precision::DOUBLE);
    k.set(0, 0, 2.0 * PI.sqrt());
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::prescribed_curvature;

    fn y32() -> CoeffFunction<f64> {
        prescribed_curvature::<crate::rigor::Interval>(Precision::DOUBLE).midpoints()
    }

    #[test]
    fn constant_curvature_gives_zero() {
        let cfg = SolverConfig { degree: 6, seed: Seed::Random, amplitude: 0.05, ..Default::default() };
        let sol = solve(&constant_curvature(6), &cfg).unwrap();
        assert!(sol.residual < 1e-11);
        // Degree-1 modes span the kernel at u = 0 (conformal motions), so
        // only smallness is expected; the invariant part vanishes.
        assert!(norm(sol.u.coeffs()) < 0.05);
        assert!(norm(&sol.u.coeffs()[4..]) < 1e-3);
        let cfg = SolverConfig { degree: 6, amplitude: 0.05, ..Default::default() };
        let u = solve(&constant_curvature(6), &cfg).unwrap().u;
        assert!(norm(u.coeffs()) < 1e-7);
    }

    #[test]
    fn seeds_parse() {
        assert_eq!("random".parse::<Seed>().unwrap(), Seed::Random);
        assert_eq!("S3".parse::<Seed>().unwrap(), Seed::Symmetric(GroupName::S3));
        assert!("octahedral".parse::<Seed>().is_err());
    }

    #[test]
    fn symmetric_seed_is_invariant() {
        let cfg = SolverConfig { degree: 8, ..Default::default() };
        let u = seed_function(&y32(), &cfg).unwrap();
        assert_eq!(symmetry_diagnosis(&u, 1e-12).unwrap(), GroupName::Td);
        let cfg = SolverConfig { seed: Seed::Symmetric(GroupName::S3), ..cfg };
        let u = seed_function(&y32(), &cfg).unwrap();
        assert_eq!(symmetry_diagnosis(&u, 1e-12).unwrap(), GroupName::S3);
    }

    #[test]
    fn divergence_reports_last_iterate() {
        let cfg = SolverConfig { degree: 6, max_iter: 1, tol: 1e-300, ..Default::default() };
        match solve(&y32(), &cfg) {
            Err(Error::Diverged { last, iterations, .. }) => {
                assert_eq!(last.degree(), 6);
                assert_eq!(iterations, 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn branch_search_finds_both_branches() {
        let k = y32();
        let cfg = SolverConfig { degree: 20, ..Default::default() };
        let td = solve_branch(&k, &cfg, GroupName::Td, 4).unwrap();
        let s3 = solve_branch(&k, &cfg, GroupName::S3, 8).unwrap();
        assert!(td.residual <= cfg.tol && s3.residual <= cfg.tol);
        assert_eq!(symmetry_diagnosis(&td.u, 1e-8).unwrap(), GroupName::Td);
        assert_eq!(symmetry_diagnosis(&s3.u, 1e-8).unwrap(), GroupName::S3);
        assert!(norm(td.u.sub(&s3.u).coeffs()) > 0.1);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SolverConfig { degree: 2, ..Default::default() };
        assert!(solve(&y32(), &cfg).is_err());
        assert!(multistart(&y32(), &SolverConfig::default(), &[], 1, 1e-6).is_err());
    }
}
