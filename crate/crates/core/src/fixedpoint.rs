//! Newton–Kantorovich closure: the nonlinear Lipschitz constant, the
//! self-map and contraction checks for the Newton map on the `H^2`-ball
//! `B(r)`, the radius search, the symmetry verdict, and the certificate
//! that chains all stages.
//!
//! With `𝓝(v) = K e^{2u0}(e^{2v} - 1 - 2v)` the Newton map
//! `T(v) = -𝓛^{-1}(F(u0) + 𝓝(v))` maps `B(r)` into itself and contracts when
//! `C_inj (F̄ + C_nl r) <= r` and `C_inj C_nl < 1`, where
//! `C_nl(r) = 4 r K̄ e^{2ū} C_emb e^{2 C_emb r}` bounds the Lipschitz
//! constant of `𝓝` on `B(r)` into `L^2`. A genuine solution then lies
//! within `L^∞` distance `r C_emb` of `u0`, and any element `g` of the ambient
//! group with `||u0 - g^* u0||_∞ >= ξ > 2 r C_emb` cannot fix it.

use std::fmt;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::analysis::{problem_bounds, sup_samples, ProblemBounds, ResidualBreakdown};
use crate::harmonics::{CoeffFile, CoeffFunction, Samples};
use crate::linearized::{default_cutoff, spectral_bounds, spectral_chain, SpectralBoundReport};
use crate::rigor::{format_directed, BigInterval, Enclosure, Interval, Precision, Scalar};
use crate::symmetry::{min_gap_over_cosets, symmetrize, tetrahedral_group, GroupName, SymmetryGroup};
use crate::Error;

/// `C_nl(r) = 4 r K̄ e^{2ū} C_emb e^{2 C_emb r}`.
pub fn nonlinear_constant<S: Enclosure>(r: &S, k_sup: &S, u0_sup: &S, c_emb: &S) -> S {
    let e1 = u0_sup.mul_f64(2.0).exp();
    let e2 = (c_emb.clone() * r).mul_f64(2.0).exp();
    r.mul_f64(4.0) * k_sup * &e1 * c_emb * &e2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport<S> {
    pub r: S,
    pub c_nonlinear: S,
    pub c_selfmap: S,
    pub c_contraction: S,
    pub selfmap_ok: bool,
    pub contraction_ok: bool,
}

/// `C_selfmap = C_inj (F̄ + C_nl r)` and `C_contraction = C_inj C_nl`.
pub fn newton_check<S: Enclosure>(r: &S, c_inj: &S, residual: &S, c_nl: &S) -> ContractionReport<S> {
    let c_selfmap = c_inj.clone() * &(residual.clone() + c_nl.clone() * r);
    let c_contraction = c_inj.clone() * c_nl;
    ContractionReport {
        r: r.clone(),
        c_nonlinear: c_nl.clone(),
        selfmap_ok: c_selfmap.hi_f64() <= r.lo_f64(),
        contraction_ok: c_contraction.hi_f64() < 1.0,
        c_selfmap,
        c_contraction,
    }
}

/// `10^{-k/4}` for `k = 8, ..., 24`: quarter decades from `1e-2` down to
/// `1e-6`, in ascending order.
pub fn default_radius_grid() -> Vec<f64> {
    (8..=24).rev().map(|k| 10f64.powf(-(k as f64) / 4.0)).collect()
}

/// Outcome of [`radius_search`]: the smallest passing radius, or the
/// closest miss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSearch<S> {
    pub found: bool,
    pub report: ContractionReport<S>,
}

/// Scans `r_grid` (ascending) for the smallest radius passing both checks.
/// On failure, reports the radius minimising
/// `max(C_selfmap / r, C_contraction)`.
pub fn radius_search<S: Enclosure>(
    c_inj: &S,
    residual: &S,
    k_sup: &S,
    u0_sup: &S,
    c_emb: &S,
    r_grid: &[f64],
) -> Result<RadiusSearch<S>, Error> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[0] >= w[1]) || r_grid[0] <= 0.0 {
        return Err(Error::Config("radius grid must be nonempty, positive and ascending".into()));
    }
    let prec = c_inj.precision();
    let mut miss: Option<(f64, ContractionReport<S>)> = None;
    for &r in r_grid {
        let rs = S::from_f64(r, prec);
        let c_nl = nonlinear_constant(&rs, k_sup, u0_sup, c_emb);
        let rep = newton_check(&rs, c_inj, residual, &c_nl);
        if rep.selfmap_ok && rep.contraction_ok {
            return Ok(RadiusSearch { found: true, report: rep });
        }
        let score = (rep.c_selfmap.hi_f64() / r).max(rep.c_contraction.hi_f64());
        if miss.as_ref().is_none_or(|(s, _)| score < *s) {
            miss = Some((score, rep));
        }
    }
    Ok(RadiusSearch { found: false, report: miss.expect("nonempty grid").1 })
}

/// `(ξ - 2 r C_emb, margin > 0)`. With `ξ = +∞` (no coset to exclude) the
/// margin is `None` and the verdict holds vacuously.
pub fn symmetry_verdict<S: Enclosure>(r: &S, xi: &S, c_emb: &S) -> (Option<S>, bool) {
    if xi.lo_f64() == f64::INFINITY {
        return (None, true);
    }
    let margin = xi.clone() - (r.clone() * c_emb).mul_f64(2.0);
    let ok = margin.lo_f64() > 0.0;
    (Some(margin), ok)
}

/// Interval endpoints as decimal strings (outward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dec {
    pub lo: String,
    pub hi: String,
}

impl Dec {
    pub fn of<S: Enclosure>(x: &S) -> Self {
        Dec { lo: x.lo_decimal(), hi: x.hi_decimal() }
    }

    pub fn to_interval(&self) -> Result<Interval, Error> {
        Ok(Interval::from_decimal(&self.lo, &self.hi, Precision::DOUBLE)?)
    }
}

fn dec_bounds<S: Enclosure>(b: &ProblemBounds<S>) -> ProblemBounds<Dec> {
    ProblemBounds {
        k_sup: Dec::of(&b.k_sup),
        k_l2: Dec::of(&b.k_l2),
        u0_sup: Dec::of(&b.u0_sup),
        v_sup: Dec::of(&b.v_sup),
        residual: ResidualBreakdown {
            p: b.residual.p,
            rp_l2: Dec::of(&b.residual.rp_l2),
            tp_l2: Dec::of(&b.residual.tp_l2),
            total: Dec::of(&b.residual.total),
        },
        c_emb: Dec::of(&b.c_emb),
    }
}

fn dec_spectral<S: Enclosure>(s: &SpectralBoundReport<S>) -> SpectralBoundReport<Dec> {
    SpectralBoundReport {
        l_cut: s.l_cut,
        gamma: Dec::of(&s.gamma),
        a_inv_bound: Dec::of(&s.a_inv_bound),
        alpha_low: Dec::of(&s.alpha_low),
        eta: Dec::of(&s.eta),
        s: Dec::of(&s.s),
        alpha_inv: Dec::of(&s.alpha_inv),
        c_priori_1: Dec::of(&s.c_priori_1),
        c_priori_2: Dec::of(&s.c_priori_2),
        c_injectivity: Dec::of(&s.c_injectivity),
    }
}

fn dec_contraction<S: Enclosure>(c: &ContractionReport<S>) -> ContractionReport<Dec> {
    ContractionReport {
        r: Dec::of(&c.r),
        c_nonlinear: Dec::of(&c.c_nonlinear),
        c_selfmap: Dec::of(&c.c_selfmap),
        c_contraction: Dec::of(&c.c_contraction),
        selfmap_ok: c.selfmap_ok,
        contraction_ok: c.contraction_ok,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Symmetrize,
    Residual,
    Spectral,
    FixedPoint,
    Symmetry,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Symmetrize => "symmetrize",
            Stage::Residual => "residual",
            Stage::Spectral => "spectral",
            Stage::FixedPoint => "fixed-point",
            Stage::Symmetry => "symmetry",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub group: GroupName,
    pub precision: Precision,
    /// Taylor degree of the exponential.
    pub p: usize,
    /// Block cutoff; chosen from `||V||_∞` when absent.
    pub l_cut: Option<usize>,
    /// Lipschitz grid for `sup |u0|`; chosen from the degree when absent.
    pub sup_samples: Option<Samples>,
    /// Sample grid for the non-symmetry gap.
    pub gap_samples: Option<Samples>,
    pub r_grid: Vec<f64>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            group: GroupName::Td,
            precision: Precision::DOUBLE,
            p: 40,
            l_cut: None,
            sup_samples: None,
            gap_samples: None,
            r_grid: default_radius_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub k: String,
    pub group: GroupName,
    pub degree: usize,
    pub l_cut: Option<usize>,
    pub p: usize,
    pub precision: Precision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub name: String,
    pub value: String,
}

/// Existence statement: a solution within `H^2` distance `r` and `L^∞`
/// distance `r C_emb` of `u0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localisation {
    pub h2_radius: Dec,
    pub linf_radius: Dec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub problem: ProblemInfo,
    pub verdict: bool,
    pub failed_stage: Option<Stage>,
    pub failure: Option<String>,
    pub bounds: Option<ProblemBounds<Dec>>,
    pub spectral: Option<SpectralBoundReport<Dec>>,
    pub contraction: Option<ContractionReport<Dec>>,
    /// `None` when the expected group is the whole ambient group.
    pub xi: Option<Dec>,
    pub symmetry_margin: Option<Dec>,
    pub symmetry_exact_ok: Option<bool>,
    pub localisation: Option<Localisation>,
    /// The symmetrised approximate solution that was certified.
    pub u0: Option<CoeffFile>,
    pub table: Vec<TableRow>,
}

impl Certificate {
    fn fail(mut self, stage: Stage, why: impl fmt::Display) -> Self {
        self.verdict = false;
        self.failed_stage = Some(stage);
        self.failure = Some(why.to_string());
        self
    }
}

fn upper10<S: Enclosure>(x: &S) -> String {
    format_directed(x, true)
}

fn lower10<S: Enclosure>(x: &S) -> String {
    format_directed(x, false)
}

/// A printed input as it appears in the table: ten decimals, scientific
/// below `1e-3`.
fn given(x: f64) -> String {
    if x.abs() >= 1e-3 {
        format!("{x:.10}")
    } else {
        format!("{x:.10e}")
    }
}

fn row(name: &str, value: String) -> TableRow {
    TableRow { name: name.into(), value }
}

/// Runs symmetrisation, bounds, the spectral stage, the radius search and
/// the symmetry verdict. Stage failures are recorded, not returned.
pub fn certify<S: Enclosure>(u0_prime: &CoeffFunction<S>, k: &CoeffFunction<S>, config: &CertifyConfig) -> Certificate {
    let n = u0_prime.degree();
    let mut cert = Certificate {
        problem: ProblemInfo {
            k: if k.degree() == 3 { "Y_3,2".into() } else { format!("degree {}", k.degree()) },
            group: config.group,
            degree: n,
            l_cut: config.l_cut,
            p: config.p,
            precision: config.precision,
        },
        verdict: false,
        failed_stage: None,
        failure: None,
        bounds: None,
        spectral: None,
        contraction: None,
        xi: None,
        symmetry_margin: None,
        symmetry_exact_ok: None,
        localisation: None,
        u0: None,
        table: Vec::new(),
    };
    let group = SymmetryGroup::new(config.group);

    let t = Instant::now();
    let u0 = match symmetrize(u0_prime, &group) {
        Ok(u) => u,
        Err(e) => return cert.fail(Stage::Symmetrize, e),
    };
    cert.u0 = Some(CoeffFile::interval(&u0));
    info!("symmetrised over {} ({} elements) in {:.2?}", group.name(), group.order(), t.elapsed());

    let t = Instant::now();
    let samples = config.sup_samples.unwrap_or_else(|| sup_samples(n));
    let bounds = match problem_bounds(&u0, k, config.p, samples) {
        Ok(b) => b,
        Err(e) => return cert.fail(Stage::Residual, e),
    };
    cert.bounds = Some(dec_bounds(&bounds));
    cert.table.extend([
        row("C_emb", upper10(&bounds.c_emb)),
        row("xi", "-".into()),
        row("N", n.to_string()),
        row("||K||_L2", upper10(&bounds.k_l2)),
        row("||K||_Linf", upper10(&bounds.k_sup)),
        row("||u0||_Linf", upper10(&bounds.u0_sup)),
        row("||F(u0)||_L2", upper10(&bounds.residual.total)),
        row("||V||_Linf", upper10(&bounds.v_sup)),
    ]);
    info!(
        "bounds in {:.2?}: sup|u0| <= {:.6e}, ||F(u0)|| <= {:.6e}, ||V|| <= {:.6e}",
        t.elapsed(),
        bounds.u0_sup.hi_f64(),
        bounds.residual.total.hi_f64(),
        bounds.v_sup.hi_f64()
    );

    let t = Instant::now();
    let l_cut = config.l_cut.unwrap_or_else(|| default_cutoff(bounds.v_sup.hi_f64()));
    cert.problem.l_cut = Some(l_cut);
    let spectral = match spectral_bounds(&u0, k, l_cut, config.p, &bounds) {
        Ok(s) => s,
        Err(e) => return cert.fail(Stage::Spectral, e),
    };
    cert.spectral = Some(dec_spectral(&spectral));
    cert.table.extend([
        row("L", l_cut.to_string()),
        row("gamma", lower10(&spectral.gamma)),
        row("||A^-1||_2", upper10(&spectral.a_inv_bound)),
        row("eta", upper10(&spectral.eta)),
        row("alpha_inv", upper10(&spectral.alpha_inv)),
        row("C_priori,1", upper10(&spectral.c_priori_1)),
        row("C_priori,2", upper10(&spectral.c_priori_2)),
        row("C_injectivity", upper10(&spectral.c_injectivity)),
    ]);
    info!("spectral stage (L = {l_cut}) in {:.2?}: alpha_inv <= {:.6e}", t.elapsed(), spectral.alpha_inv.hi_f64());

    let search = match radius_search(
        &spectral.c_injectivity,
        &bounds.residual.total,
        &bounds.k_sup,
        &bounds.u0_sup,
        &bounds.c_emb,
        &config.r_grid,
    ) {
        Ok(s) => s,
        Err(e) => return cert.fail(Stage::FixedPoint, e),
    };
    let rep = search.report;
    cert.contraction = Some(dec_contraction(&rep));
    cert.table.extend([
        row("r", upper10(&rep.r)),
        row("C_selfmap(r)", upper10(&rep.c_selfmap)),
        row("C_contraction", upper10(&rep.c_contraction)),
    ]);
    if !search.found {
        let why = format!(
            "no radius passes: closest r = {:.4e} with C_selfmap = {:.4e}, C_contraction = {:.4e}",
            rep.r.hi_f64(),
            rep.c_selfmap.hi_f64(),
            rep.c_contraction.hi_f64()
        );
        return cert.fail(Stage::FixedPoint, why);
    }
    cert.localisation = Some(Localisation {
        h2_radius: Dec::of(&rep.r),
        linf_radius: Dec::of(&(rep.r.clone() * &bounds.c_emb)),
    });

    let t = Instant::now();
    let ambient = tetrahedral_group();
    let gap_samples = config.gap_samples.unwrap_or_else(|| Samples::for_degree(n));
    let xi = match min_gap_over_cosets(&u0, &group, &ambient, gap_samples) {
        Ok(x) => x,
        Err(e) => return cert.fail(Stage::Symmetry, e),
    };
    let (margin, exact) = symmetry_verdict(&rep.r, &xi, &bounds.c_emb);
    if let Some(m) = &margin {
        cert.xi = Some(Dec::of(&xi));
        cert.symmetry_margin = Some(Dec::of(m));
        cert.table[1].value = lower10(&xi);
        cert.table.push(row("symmetry margin", lower10(m)));
    }
    cert.symmetry_exact_ok = Some(exact);
    info!("symmetry stage in {:.2?}: xi >= {:.6e}", t.elapsed(), xi.lo_f64());
    if !exact {
        return cert.fail(Stage::Symmetry, format!("xi = {:.4e} does not exceed 2 r C_emb", xi.lo_f64()));
    }
    cert.verdict = true;
    cert
}

/// [`certify`] for coefficients read from a file, on the binary64 backend at
/// 53 bits and on MPFR otherwise.
pub fn certify_file(file: &CoeffFile, config: &CertifyConfig) -> Result<Certificate, Error> {
    let prec = config.precision;
    Ok(if prec == Precision::DOUBLE {
        let u = file.to_function::<Interval>(prec)?;
        certify(&u, &crate::analysis::prescribed_curvature(prec), config)
    } else {
        let u = file.to_function::<BigInterval>(prec)?;
        certify(&u, &crate::analysis::prescribed_curvature(prec), config)
    })
}

/// Upstream values of one column of the published constant table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableInputs {
    pub name: &'static str,
    pub degree: usize,
    pub c_emb: f64,
    pub k_sup: f64,
    pub u0_sup: f64,
    pub residual: f64,
    pub v_sup: f64,
    pub l_cut: usize,
    pub a_inv: f64,
    pub r: f64,
    pub xi: Option<f64>,
}

/// Downstream values of the same column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOutputs {
    pub gamma: f64,
    pub eta: f64,
    pub alpha_inv: f64,
    pub c_priori_1: f64,
    pub c_priori_2: f64,
    pub c_injectivity: f64,
    pub c_selfmap: f64,
    pub c_contraction: f64,
}

pub const REFERENCE_TD: (TableInputs, TableOutputs) = (
    TableInputs {
        name: "Td",
        degree: 44,
        c_emb: 1.1890517449,
        k_sup: 0.5562984315,
        u0_sup: 1.5765413397,
        residual: 2.1999472131e-8,
        v_sup: 26.0437932936,
        l_cut: 32,
        a_inv: 0.5138063021,
        r: 3.1622776602e-4,
        xi: None,
    },
    TableOutputs {
        gamma: 1095.9562067064,
        eta: 26.0437932936,
        alpha_inv: 0.7712744064,
        c_priori_1: 1.4142135624,
        c_priori_2: 37.8314856915,
        c_injectivity: 30.5926702316,
        c_selfmap: 1.9029076628e-4,
        c_contraction: 0.5996239548,
    },
);

pub const REFERENCE_S3: (TableInputs, TableOutputs) = (
    TableInputs {
        name: "S3",
        degree: 72,
        c_emb: 1.1890517449,
        k_sup: 0.5562984315,
        u0_sup: 1.7834303808,
        residual: 2.2163910321e-12,
        v_sup: 39.3917955859,
        l_cut: 52,
        a_inv: 1.4476618829,
        r: 1.7782794100e-5,
        xi: Some(0.1151874280),
    },
    TableOutputs {
        gamma: 2822.6082044141,
        eta: 39.3917955859,
        alpha_inv: 7.1899289906,
        c_priori_1: 1.4142135624,
        c_priori_2: 56.7084115638,
        c_injectivity: 409.1436658767,
        c_selfmap: 1.2121691214e-5,
        c_contraction: 0.6816017957,
    },
);

/// One unit in the 10th significant digit of `x`.
pub fn printed_ulp(x: f64) -> f64 {
    10f64.powi(x.abs().log10().floor() as i32 - 9)
}

/// A printed value `x` as the interval `[x - ulp, x + ulp]`.
pub fn printed(x: f64) -> Interval {
    let u = printed_ulp(x);
    Interval::new(x - u, x + u)
}

/// The downstream constants recomputed from printed upstream values.
#[derive(Debug, Clone)]
pub struct TableChain {
    pub spectral: SpectralBoundReport<Interval>,
    pub contraction: ContractionReport<Interval>,
    pub symmetry_margin: Option<Interval>,
}

pub fn table_chain(t: &TableInputs) -> Result<TableChain, Error> {
    chain(t, printed)
}

fn chain(t: &TableInputs, lift: fn(f64) -> Interval) -> Result<TableChain, Error> {
    let spectral = spectral_chain(t.l_cut, &lift(t.a_inv), &lift(t.v_sup))?;
    let r = lift(t.r);
    let c_emb = lift(t.c_emb);
    let c_nl = nonlinear_constant(&r, &lift(t.k_sup), &lift(t.u0_sup), &c_emb);
    let contraction = newton_check(&r, &spectral.c_injectivity, &lift(t.residual), &c_nl);
    let xi = t.xi.map(lift).unwrap_or(Interval::new(f64::INFINITY, f64::INFINITY));
    let (symmetry_margin, _) = symmetry_verdict(&r, &xi, &c_emb);
    Ok(TableChain { spectral, contraction, symmetry_margin })
}

/// Table rows of one reference column: upstream values as printed,
/// downstream values recomputed from them as exact points and rounded to
/// nearest; [`table_chain`] carries the printing error instead.
pub fn reference_table(t: &TableInputs) -> Result<Vec<TableRow>, Error> {
    let ch = chain(t, Interval::point)?;
    let lower10 = |x: &Interval| given(x.mid());
    let upper10 = lower10;
    let s = &ch.spectral;
    let c = &ch.contraction;
    let mut rows = vec![
        row("C_emb", given(t.c_emb)),
        row("xi", t.xi.map_or("-".into(), given)),
        row("N", t.degree.to_string()),
        row("||K||_L2", given(1.0)),
        row("||K||_Linf", given(t.k_sup)),
        row("||u0||_Linf", given(t.u0_sup)),
        row("||F(u0)||_L2", given(t.residual)),
        row("||V||_Linf", given(t.v_sup)),
        row("L", t.l_cut.to_string()),
        row("gamma", lower10(&s.gamma)),
        row("||A^-1||_2", given(t.a_inv)),
        row("eta", upper10(&s.eta)),
        row("alpha_inv", upper10(&s.alpha_inv)),
        row("C_priori,1", upper10(&s.c_priori_1)),
        row("C_priori,2", upper10(&s.c_priori_2)),
        row("C_injectivity", upper10(&s.c_injectivity)),
        row("r", given(t.r)),
        row("C_selfmap(r)", upper10(&c.c_selfmap)),
        row("C_contraction", upper10(&c.c_contraction)),
    ];
    if let Some(m) = &ch.symmetry_margin {
        rows.push(row("symmetry margin", lower10(m)));
    }
    Ok(rows)
}
