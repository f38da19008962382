//! Point groups acting on the sphere and their pullback action
//! `u ↦ u ∘ g` on coefficient functions.
//!
//! The symmetry group of `Y_32 ∝ z(x^2 - y^2)` is the tetrahedral group
//! `T_d` (signed permutations of `(x, y, z)` with an even number of sign
//! changes) conjugated by the rotation `R` of 45° about the z-axis, since
//! `Y_32 ∘ R ∝ xyz`. Every element is `g = R H R^{-1}` with `H` a signed
//! permutation, and `u ∘ g` is computed in coefficient space by factoring
//! `H` into axis sign flips, the swap `(x, y, z) ↦ (y, x, z)` and the cycle
//! `(x, y, z) ↦ (y, z, x)`. Rotations about z, flips and the swap act by
//! closed formulas on each `(l, ±m)` pair; the cycle mixes orders within a
//! degree and is tabulated once per degree and precision by exact Gauss
//! quadrature. [`pullback_direct`] projects `u(g x)` sampled on a Gauss grid
//! and serves as an independent check.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use crate::harmonics::legendre::{table_precision, ylm_cartesian, LegendreCoeffs};
use crate::harmonics::{index, trig_tables, CoeffFunction, Samples, SphereGrid};
use crate::par;
use crate::quadrature::gauss_legendre;
use crate::rigor::{BigInterval, Enclosure, Interval, Precision, Scalar};
use crate::Error;

/// The linear map `(Hx)_i = sign_i x_{perm_i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedPerm {
    perm: [usize; 3],
    sign: [i8; 3],
}

const SWAP: SignedPerm = SignedPerm { perm: [1, 0, 2], sign: [1, 1, 1] };
const CYCLE: SignedPerm = SignedPerm { perm: [1, 2, 0], sign: [1, 1, 1] };

impl SignedPerm {
    pub const IDENTITY: SignedPerm = SignedPerm { perm: [0, 1, 2], sign: [1, 1, 1] };

    pub fn new(perm: [usize; 3], sign: [i8; 3]) -> Option<Self> {
        let mut seen = [false; 3];
        for &p in &perm {
            if p > 2 || seen[p] {
                return None;
            }
            seen[p] = true;
        }
        sign.iter().all(|s| s.abs() == 1).then_some(SignedPerm { perm, sign })
    }

    pub fn perm(&self) -> [usize; 3] {
        self.perm
    }

    pub fn sign(&self) -> [i8; 3] {
        self.sign
    }

    /// The map `x ↦ self(other(x))`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut perm = [0; 3];
        let mut sign = [1; 3];
        for i in 0..3 {
            perm[i] = other.perm[self.perm[i]];
            sign[i] = self.sign[i] * other.sign[self.perm[i]];
        }
        SignedPerm { perm, sign }
    }

    pub fn inverse(&self) -> Self {
        let mut perm = [0; 3];
        let mut sign = [1; 3];
        for i in 0..3 {
            perm[self.perm[i]] = i;
            sign[self.perm[i]] = self.sign[i];
        }
        SignedPerm { perm, sign }
    }

    pub fn negatives(&self) -> usize {
        self.sign.iter().filter(|&&s| s < 0).count()
    }

    pub fn matrix(&self) -> [[i8; 3]; 3] {
        let mut m = [[0; 3]; 3];
        for i in 0..3 {
            m[i][self.perm[i]] = self.sign[i];
        }
        m
    }

    pub fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| self.sign[i] as f64 * x[self.perm[i]])
    }

    /// `(a, b)` with `perm` equal to the permutation of `SWAP^a ∘ CYCLE^b`.
    fn factor(&self) -> (usize, usize) {
        for a in 0..2 {
            for b in 0..3 {
                let mut p = SignedPerm::IDENTITY;
                for _ in 0..a {
                    p = p.compose(&SWAP);
                }
                for _ in 0..b {
                    p = p.compose(&CYCLE);
                }
                if p.perm == self.perm {
                    return (a, b);
                }
            }
        }
        unreachable!("every permutation of three letters factors")
    }

    fn all() -> impl Iterator<Item = SignedPerm> {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        PERMS.into_iter().flat_map(|perm| {
            (0..8).map(move |bits| {
                let sign = std::array::from_fn(|i| if bits >> i & 1 == 1 { -1 } else { 1 });
                SignedPerm { perm, sign }
            })
        })
    }
}

impl fmt::Display for SignedPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const AXES: [char; 3] = ['x', 'y', 'z'];
        let parts: Vec<String> = (0..3)
            .map(|i| format!("{}{}", if self.sign[i] < 0 { "-" } else { "" }, AXES[self.perm[i]]))
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// An element `R H R^{-1}` of `O(3)`, `R` the 45° rotation about z.
#[derive(Debug, Clone)]
pub struct GroupElement {
    label: String,
    base: SignedPerm,
    matrix: [[Interval; 3]; 3],
}

impl GroupElement {
    pub fn conjugated(base: SignedPerm) -> Self {
        let big = conjugate_matrix(&base, Precision::DOUBLE.plus(64));
        GroupElement {
            label: format!("R{base}R^-1"),
            base,
            matrix: big.map(|row| row.map(|x| Interval::from_big(&x))),
        }
    }

    pub fn identity() -> Self {
        Self::conjugated(SignedPerm::IDENTITY)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The signed permutation `H` of `g = R H R^{-1}`.
    pub fn base(&self) -> SignedPerm {
        self.base
    }

    pub fn matrix(&self) -> &[[Interval; 3]; 3] {
        &self.matrix
    }

    /// The matrix enclosed at `prec` bits.
    pub fn matrix_big(&self, prec: Precision) -> [[BigInterval; 3]; 3] {
        conjugate_matrix(&self.base, prec)
    }

    pub fn is_identity(&self) -> bool {
        self.base == SignedPerm::IDENTITY
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::conjugated(self.base.compose(&other.base))
    }

    pub fn inverse(&self) -> Self {
        Self::conjugated(self.base.inverse())
    }

    /// Whether all matrix entries overlap those of `other`.
    pub fn matches(&self, other: &Self) -> bool {
        self.matrix
            .iter()
            .flatten()
            .zip(other.matrix.iter().flatten())
            .all(|(a, b)| a.overlaps(b))
    }
}

fn mat3<S: Scalar>(a: &[[S; 3]; 3], b: &[[S; 3]; 3]) -> [[S; 3]; 3] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            a[i][0].clone() * &b[0][j] + a[i][1].clone() * &b[1][j] + a[i][2].clone() * &b[2][j]
        })
    })
}

fn conjugate_matrix(base: &SignedPerm, prec: Precision) -> [[BigInterval; 3]; 3] {
    let h = BigInterval::from_i64(2, prec).try_sqrt().expect("2 > 0").try_div(&BigInterval::from_i64(2, prec));
    let h = h.expect("2 != 0");
    let z = BigInterval::zero(prec);
    let one = BigInterval::one(prec);
    let r = [
        [h.clone(), -h.clone(), z.clone()],
        [h.clone(), h.clone(), z.clone()],
        [z.clone(), z.clone(), one.clone()],
    ];
    let rt = std::array::from_fn(|i| std::array::from_fn(|j| r[j][i].clone()));
    let m = base.matrix().map(|row| row.map(|s| BigInterval::from_i64(s as i64, prec)));
    mat3(&mat3(&r, &m), &rt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum GroupName {
    Td,
    S3,
    #[serde(rename = "trivial")]
    Trivial,
}

impl GroupName {
    pub fn order(self) -> usize {
        match self {
            GroupName::Td => 24,
            GroupName::S3 => 6,
            GroupName::Trivial => 1,
        }
    }
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupName::Td => "Td",
            GroupName::S3 => "S3",
            GroupName::Trivial => "trivial",
        })
    }
}

impl FromStr for GroupName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "Td" | "td" | "T_d" => Ok(GroupName::Td),
            "S3" | "s3" | "S_3" => Ok(GroupName::S3),
            "trivial" | "1" => Ok(GroupName::Trivial),
            _ => Err(Error::Format(format!("unknown group '{s}' (expected Td, S3 or trivial)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    name: GroupName,
    elements: Vec<GroupElement>,
}

impl SymmetryGroup {
    pub fn new(name: GroupName) -> Self {
        match name {
            GroupName::Td => tetrahedral_group(),
            GroupName::S3 => s3_group(),
            GroupName::Trivial => trivial_group(),
        }
    }

    pub fn name(&self) -> GroupName {
        self.name
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Whether some element matches `g`.
    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.iter().any(|h| h.matches(g))
    }
}

/// `R T_d R^{-1}`, identity first.
pub fn tetrahedral_group() -> SymmetryGroup {
    let elements = SignedPerm::all()
        .filter(|h| h.negatives() % 2 == 0)
        .map(GroupElement::conjugated)
        .collect();
    SymmetryGroup { name: GroupName::Td, elements }
}

/// `R c <a, b> c^{-1} R^{-1}` with `a = (y, z, x)`, `b = (y, x, z)` and
/// `c = (-x, -y, z)`, identity first.
pub fn s3_group() -> SymmetryGroup {
    let c = SignedPerm { perm: [0, 1, 2], sign: [-1, -1, 1] };
    let elements = SignedPerm::all()
        .filter(|h| h.negatives() == 0)
        .map(|p| GroupElement::conjugated(c.compose(&p).compose(&c.inverse())))
        .collect();
    SymmetryGroup { name: GroupName::S3, elements }
}

pub fn trivial_group() -> SymmetryGroup {
    SymmetryGroup { name: GroupName::Trivial, elements: vec![GroupElement::identity()] }
}

/// `cos(mπ/4)`, `sin(mπ/4)` for `m <= n`, with exact zeros and ones.
fn eighth_turns<S: Scalar>(n: usize, prec: Precision) -> (Vec<S>, Vec<S>) {
    let h = S::from_big(
        &BigInterval::from_i64(2, prec.plus(32))
            .try_sqrt()
            .and_then(|r| r.try_div(&BigInterval::from_i64(2, prec.plus(32))))
            .expect("positive"),
    );
    let z = S::zero(prec);
    let one = S::one(prec);
    let cos = [one.clone(), h.clone(), z.clone(), -h.clone(), -one.clone(), -h.clone(), z.clone(), h.clone()];
    let sin = [z.clone(), h.clone(), one.clone(), h.clone(), z.clone(), -h.clone(), -one.clone(), -h.clone()];
    ((0..=n).map(|m| cos[m % 8].clone()).collect(), (0..=n).map(|m| sin[m % 8].clone()).collect())
}

/// `u ∘ R_z(±π/4)`: `φ ↦ φ ± π/4`.
fn rotate_eighth<S: Scalar>(u: &CoeffFunction<S>, positive: bool, cos: &[S], sin: &[S]) -> CoeffFunction<S> {
    let mut out = u.clone();
    for l in 1..=u.degree() {
        for m in 1..=l {
            let s = if positive { sin[m].clone() } else { -sin[m].clone() };
            let a = u.get(l, m as i64);
            let b = u.get(l, -(m as i64));
            out.set(l, m as i64, a.clone() * &cos[m] + b.clone() * &s);
            out.set(l, -(m as i64), b.clone() * &cos[m] - a.clone() * &s);
        }
    }
    out
}

/// `u ∘ diag(sign)`.
fn flip<S: Scalar>(u: &CoeffFunction<S>, sign: [i8; 3]) -> CoeffFunction<S> {
    let mut out = u.clone();
    for l in 0..=u.degree() {
        for m in -(l as i64)..=l as i64 {
            let am = m.unsigned_abs() as usize;
            let odd_m = am % 2 == 1;
            let mut neg = false;
            if sign[0] < 0 {
                neg ^= if m >= 0 { odd_m } else { !odd_m };
            }
            if sign[1] < 0 && m < 0 {
                neg ^= true;
            }
            if sign[2] < 0 && (l - am) % 2 == 1 {
                neg ^= true;
            }
            if neg {
                out.set(l, m, -u.get(l, m).clone());
            }
        }
    }
    out
}

/// `u ∘ SWAP`: `(x + iy)^m ↦ i^m conj((x + iy)^m)`.
fn swap<S: Scalar>(u: &CoeffFunction<S>) -> CoeffFunction<S> {
    let mut out = u.clone();
    for l in 1..=u.degree() {
        for m in 1..=l {
            let a = u.get(l, m as i64).clone();
            let b = u.get(l, -(m as i64)).clone();
            let (na, nb) = match m % 4 {
                0 => (a, -b),
                1 => (b, a),
                2 => (-a, b),
                _ => (-b, -a),
            };
            out.set(l, m as i64, na);
            out.set(l, -(m as i64), nb);
        }
    }
    out
}

/// Per-degree matrices `D_l[m'][m] = ∫ Y_lm(Cx) Y_lm'(x)` of `u ↦ u ∘ CYCLE`.
struct CycleTable<S> {
    degree: usize,
    blocks: Vec<Vec<S>>,
}

impl<S: Scalar> CycleTable<S> {
    fn compute(n: usize, prec: Precision) -> Result<Self, Error> {
        let k = n + 1;
        let grid = SphereGrid::<S>::gauss(n, k, prec)?;
        let hp = table_precision(prec, n);
        let rule = gauss_legendre(k, hp)?;
        let coeffs = LegendreCoeffs::new(n, hp)?;
        let nphi = grid.nphi();
        let (cphi, sphi) = trig_tables(nphi, hp);
        let t = grid.fourier(n);
        let nf = (n + 1) * (n + 1);
        let weights = grid.weights().expect("Gauss grid has weights");
        let zero_blocks = || -> Vec<Vec<S>> { (0..=n).map(|l| vec![S::zero(prec); (2 * l + 1).pow(2)]).collect() };
        let parts = par::map_chunks(k, 4, |rows| {
            let mut acc = zero_blocks();
            for i in rows {
                let (mu, s) = (&rule.mu()[i], &rule.sin_theta()[i]);
                let mut v = Vec::with_capacity(nphi * nf);
                for j in 0..nphi {
                    let x = s.clone() * &cphi[j];
                    let y = s.clone() * &sphi[j];
                    v.extend(ylm_cartesian(&coeffs, &y, mu, &x).iter().map(S::from_big));
                }
                let f = S::matmul(&t, &v, 2 * n + 1, nphi, nf, prec);
                for (l, block) in acc.iter_mut().enumerate() {
                    let w = 2 * l + 1;
                    for mp in -(l as i64)..=l as i64 {
                        let am = mp.unsigned_abs() as usize;
                        let p = grid.legendre_table(am)[i * (n + 1 - am) + l - am].clone() * &weights[i];
                        let row = (mp + n as i64) as usize * nf;
                        let r = (mp + l as i64) as usize;
                        for m in -(l as i64)..=l as i64 {
                            block[r * w + (m + l as i64) as usize].mul_add_assign(&f[row + index(l, m)], &p);
                        }
                    }
                }
            }
            acc
        });
        let mut blocks = zero_blocks();
        for part in parts {
            for (b, p) in blocks.iter_mut().zip(&part) {
                for (x, y) in b.iter_mut().zip(p) {
                    *x += y;
                }
            }
        }
        Ok(CycleTable { degree: n, blocks })
    }

    fn apply(&self, u: &CoeffFunction<S>) -> CoeffFunction<S> {
        let prec = u.precision();
        let mut out = u.clone();
        for l in 0..=u.degree() {
            let w = 2 * l + 1;
            let c = &u.coeffs()[l * l..l * l + w];
            let d = S::matmul(&self.blocks[l], c, w, w, 1, prec);
            for (t, v) in d.into_iter().enumerate() {
                out.set(l, t as i64 - l as i64, v);
            }
        }
        out
    }
}

type TableCache = HashMap<(TypeId, u32), Arc<dyn Any + Send + Sync>>;

fn cycle_table<S: Scalar>(n: usize, prec: Precision) -> Result<Arc<CycleTable<S>>, Error> {
    static CACHE: OnceLock<Mutex<TableCache>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (TypeId::of::<S>(), prec.bits());
    let hit = cache.lock().expect("cache lock").get(&key).cloned();
    if let Some(t) = hit.and_then(|a| a.downcast::<CycleTable<S>>().ok()) {
        if t.degree >= n {
            return Ok(t);
        }
    }
    // Computed outside the lock: nested data-parallel calls may re-enter.
    let t = Arc::new(CycleTable::<S>::compute(n, prec)?);
    let mut map = cache.lock().expect("cache lock");
    let keep = match map.get(&key).and_then(|a| a.clone().downcast::<CycleTable<S>>().ok()) {
        Some(old) if old.degree >= t.degree => old,
        _ => {
            map.insert(key, t.clone());
            t
        }
    };
    Ok(keep)
}

/// Coefficients of `x ↦ u(g x)`, exact in coefficient space up to rounding.
pub fn pullback<S: Scalar>(u: &CoeffFunction<S>, g: &GroupElement) -> Result<CoeffFunction<S>, Error> {
    if g.is_identity() {
        return Ok(u.clone());
    }
    let n = u.degree();
    let prec = u.precision();
    let (cos, sin) = eighth_turns::<S>(n, prec);
    let h = g.base();
    // u ∘ R H R^{-1} with H = diag(sign) ∘ SWAP^a ∘ CYCLE^b.
    let mut v = rotate_eighth(u, true, &cos, &sin);
    v = flip(&v, h.sign);
    let (a, b) = h.factor();
    for _ in 0..a {
        v = swap(&v);
    }
    if b > 0 {
        let table = cycle_table::<S>(n, prec)?;
        for _ in 0..b {
            v = table.apply(&v);
        }
    }
    Ok(rotate_eighth(&v, false, &cos, &sin))
}

/// [`pullback`] by direct projection: `u(g x)` is enclosed in MPFR at the
/// nodes of the `k`-point Gauss product grid and analysed, which is exact
/// for `k > degree`.
pub fn pullback_direct<S: Enclosure>(u: &CoeffFunction<S>, g: &GroupElement, k: usize) -> Result<CoeffFunction<S>, Error> {
    let n = u.degree();
    if k < n + 1 {
        return Err(Error::QuadratureTooSmall { degree: 2 * n, got: k });
    }
    let prec = u.precision();
    let grid = SphereGrid::<S>::gauss(n, k, prec)?;
    let hp = table_precision(prec, n);
    let rule = gauss_legendre(k, hp)?;
    let coeffs = LegendreCoeffs::new(n, hp)?;
    let (cphi, sphi) = trig_tables(grid.nphi(), hp);
    let gm = g.matrix_big(hp);
    let c: Vec<BigInterval> = u.coeffs().iter().map(|x| x.to_big()).collect();
    let nphi = grid.nphi();
    let values: Vec<S> = par::map_range(k * nphi, |q| {
        let (i, j) = (q / nphi, q % nphi);
        let s = &rule.sin_theta()[i];
        let x = [s.clone() * &cphi[j], s.clone() * &sphi[j], rule.mu()[i].clone()];
        let gx: [BigInterval; 3] = std::array::from_fn(|r| {
            gm[r][0].clone() * &x[0] + gm[r][1].clone() * &x[1] + gm[r][2].clone() * &x[2]
        });
        let ys = ylm_cartesian(&coeffs, &gx[0], &gx[1], &gx[2]);
        let mut acc = BigInterval::zero(hp);
        for (a, y) in c.iter().zip(&ys) {
            acc += &(a.clone() * y);
        }
        S::from_big(&acc)
    });
    Ok(grid.analyze(&values, n))
}

/// One element from each left coset `g H` of `sub` in `ambient`, identity
/// first. Pulling a `H`-invariant function back by these gives its orbit.
pub fn coset_representatives(sub: &SymmetryGroup, ambient: &SymmetryGroup) -> Vec<GroupElement> {
    let mut reps: Vec<GroupElement> = Vec::new();
    for g in ambient.elements() {
        if reps.iter().all(|h| !sub.contains(&h.inverse().compose(g))) {
            reps.push(g.clone());
        }
    }
    reps
}

/// `(1/|G|) Σ_g g^* u`, which contains a `G`-invariant member whenever `u`
/// contains any function.
pub fn symmetrize<S: Scalar>(u: &CoeffFunction<S>, group: &SymmetryGroup) -> Result<CoeffFunction<S>, Error> {
    let prec = u.precision();
    let mut acc = CoeffFunction::zeros(u.degree(), prec);
    for g in group.elements() {
        acc = acc.add(&pullback(u, g)?);
    }
    let inv = S::one(prec).try_div(&S::from_i64(group.order() as i64, prec))?;
    Ok(acc.scale(&inv))
}

fn gap_on_grid<S: Enclosure>(grid: &SphereGrid<S>, u0: &CoeffFunction<S>, g: &GroupElement) -> Result<S, Error> {
    let d = u0.sub(&pullback(u0, g)?);
    let best = grid.synthesize(&d).iter().map(|v| v.mig()).fold(0.0, f64::max);
    Ok(S::from_f64(best, u0.precision()))
}

/// Lower bound on `||u0 - g^* u0||_∞` valid for every member of `u0`: the
/// largest certain gap `|u0(x) - u0(gx)|` over the sample nodes.
pub fn nonsymmetry_gap<S: Enclosure>(u0: &CoeffFunction<S>, g: &GroupElement, samples: Samples) -> Result<S, Error> {
    let grid = SphereGrid::<S>::equiangular(u0.degree(), samples.ntheta, samples.nphi, u0.precision())?;
    gap_on_grid(&grid, u0, g)
}

/// Minimum of [`nonsymmetry_gap`] over `ambient` minus `expected`; `+∞`
/// when every ambient element is expected.
pub fn min_gap_over_cosets<S: Enclosure>(
    u0: &CoeffFunction<S>,
    expected: &SymmetryGroup,
    ambient: &SymmetryGroup,
    samples: Samples,
) -> Result<S, Error> {
    let prec = u0.precision();
    let others: Vec<&GroupElement> = ambient.elements().iter().filter(|g| !expected.contains(g)).collect();
    if others.is_empty() {
        return Ok(S::from_bounds(f64::INFINITY, f64::INFINITY, prec));
    }
    let grid = SphereGrid::<S>::equiangular(u0.degree(), samples.ntheta, samples.nphi, prec)?;
    let mut best: Option<S> = None;
    for g in others {
        let gap = gap_on_grid(&grid, u0, g)?;
        best = Some(match best {
            Some(b) => b.min(&gap),
            None => gap,
        });
    }
    Ok(best.expect("nonempty"))
}
