//! Hardy spaces on the nc polydisc and ball: inner products, coefficient
//! recovery from boundary integrals, radial profiles, `Υ_p` membership and the
//! kernels `K_p`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::haar::{self, Executor, MCEstimate, McPlan};
use crate::linalg::{self, CMatrix, Complex64, ZERO};
use crate::weingarten::{BoundaryKind, WeingartenTable};
use crate::words::{self, series_eval, word_eval, MatrixTuple, NcSeries, Word};

/// Which Hardy space; fixes the boundary measure and the coefficient weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Polydisc(usize),
    Ball(usize),
}

impl SpaceKind {
    pub fn alphabet(&self) -> usize {
        match *self {
            SpaceKind::Polydisc(m) | SpaceKind::Ball(m) => m,
        }
    }

    pub fn boundary(&self) -> BoundaryKind {
        match *self {
            SpaceKind::Polydisc(m) => BoundaryKind::Polydisc(m),
            SpaceKind::Ball(m) => BoundaryKind::BallColumn(m),
        }
    }

    /// `p` such that the norm of the space is the `ℓ²_p` norm of coefficients.
    pub fn p(&self) -> f64 {
        match *self {
            SpaceKind::Polydisc(_) => 1.0,
            SpaceKind::Ball(m) => m as f64,
        }
    }

    /// Weight of a length-`l` coefficient: 1, or `m^{-l}` on the ball.
    pub fn weight(&self, l: usize) -> f64 {
        self.p().powi(-(l as i32))
    }

    fn check(&self, s: &NcSeries) -> Result<()> {
        let m = self.alphabet();
        if m == 0 {
            return Err(Error::Domain("alphabet size must be at least 1".into()));
        }
        if s.alphabet() != m {
            return Err(Error::AlphabetMismatch { expected: m, found: s.alphabet() });
        }
        Ok(())
    }
}

/// `⟨f, g⟩ = Σ_w weight(|w|) f_w conj(g_w)`.
pub fn inner_product(f: &NcSeries, g: &NcSeries, kind: SpaceKind) -> Result<Complex64> {
    kind.check(f)?;
    kind.check(g)?;
    let (small, large, flip) = if f.len() <= g.len() { (f, g, false) } else { (g, f, true) };
    let mut acc = ZERO;
    for (w, &a) in small.terms() {
        let b = large.coeff(w);
        if b == ZERO {
            continue;
        }
        let (fw, gw) = if flip { (b, a) } else { (a, b) };
        acc += fw * gw.conj() * kind.weight(w.len());
    }
    Ok(acc)
}

/// How boundary integrals are evaluated.
#[derive(Clone, Copy)]
pub enum Engine<'a> {
    Exact(&'a WeingartenTable),
    MonteCarlo { plan: McPlan, exec: &'a dyn Executor },
}

impl Engine<'static> {
    pub fn exact() -> Self {
        Engine::Exact(WeingartenTable::global())
    }
}

/// A boundary integral, exact or sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Evaluated {
    Exact(Complex64),
    Sampled(MCEstimate),
}

impl Evaluated {
    pub fn value(&self) -> Complex64 {
        match self {
            Evaluated::Exact(v) => *v,
            Evaluated::Sampled(e) => e.mean,
        }
    }

    pub fn std_error(&self) -> Option<f64> {
        match self {
            Evaluated::Exact(_) => None,
            Evaluated::Sampled(e) => Some(e.std_error),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Evaluated::Exact(_))
    }

    fn scaled(self, s: f64) -> Evaluated {
        match self {
            Evaluated::Exact(v) => Evaluated::Exact(v * s),
            Evaluated::Sampled(e) => Evaluated::Sampled(MCEstimate {
                mean: e.mean * s,
                std_error: e.std_error * s.abs(),
                ..e
            }),
        }
    }
}

fn cell_stream(plan: &McPlan, r_index: usize, level: usize) -> McPlan {
    plan.derive(((level as u64) << 24) ^ r_index as u64)
}

/// `∫ (1/N) Tr(g(rX)^* f(rX)) dω_N` on one boundary.
pub fn boundary_pairing(
    f: &NcSeries,
    g: &NcSeries,
    r: f64,
    kind: BoundaryKind,
    level: usize,
    engine: &Engine<'_>,
) -> Result<Evaluated> {
    match engine {
        Engine::Exact(table) => Ok(Evaluated::Exact(table.sesquilinear_moment_exact(f, g, r, kind, level)?)),
        Engine::MonteCarlo { plan, exec } => {
            Ok(Evaluated::Sampled(haar::mc_pairing(f, g, r, kind, level, plan, *exec)?))
        }
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryRow {
    pub level: usize,
    pub value: Evaluated,
}

/// Per-level recovered coefficients of one word.
#[derive(Clone, Debug)]
pub struct RecoveryTable {
    pub word: Word,
    pub r: f64,
    pub rows: Vec<RecoveryRow>,
}

impl RecoveryTable {
    /// The value at the largest level on the grid.
    pub fn recovered(&self) -> Evaluated {
        self.rows.iter().max_by_key(|row| row.level).expect("grid is nonempty").value
    }

    /// Successive differences along the grid (sorted by level).
    pub fn trend(&self) -> Vec<Complex64> {
        let mut rows: Vec<&RecoveryRow> = self.rows.iter().collect();
        rows.sort_by_key(|row| row.level);
        rows.windows(2).map(|p| p[1].value.value() - p[0].value.value()).collect()
    }

    /// Eliminates a `c/N²` error term using the two largest levels.
    pub fn richardson(&self) -> Option<Complex64> {
        let mut rows: Vec<&RecoveryRow> = self.rows.iter().collect();
        rows.sort_by_key(|row| row.level);
        let [.., a, b] = rows.as_slice() else {
            return None;
        };
        let (na, nb) = ((a.level * a.level) as f64, (b.level * b.level) as f64);
        Some((b.value.value() * nb - a.value.value() * na) / (nb - na))
    }
}

/// Recovers `f_w` as `(weight(|w|) r^{|w|})^{-1} ∫ (1/N) Tr((X^w)^* f(rX)) dω_N`
/// for each level of the grid.
pub fn coeff_recover(
    f: &NcSeries,
    w: &Word,
    r: f64,
    kind: SpaceKind,
    levels: &[usize],
    engine: &Engine<'_>,
) -> Result<RecoveryTable> {
    kind.check(f)?;
    w.check_alphabet(kind.alphabet())?;
    if levels.is_empty() {
        return Err(Error::Domain("level grid is empty".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("recovery needs r > 0, got {r}")));
    }
    let boundary = kind.boundary();
    let scale = 1.0 / (kind.weight(w.len()) * r.powi(w.len() as i32));
    let mut rows = Vec::with_capacity(levels.len());
    for (i, &level) in levels.iter().enumerate() {
        let value = match engine {
            Engine::Exact(table) => {
                let mut acc = ZERO;
                for (v, &c) in f.terms() {
                    let moment = table.pairing_moment_exact(w, v, boundary, level)?;
                    if moment != 0.0 {
                        acc += c * r.powi(v.len() as i32) * moment / level as f64;
                    }
                }
                Evaluated::Exact(acc)
            }
            Engine::MonteCarlo { plan, exec } => {
                let plan = cell_stream(plan, i, level);
                Evaluated::Sampled(haar::estimate(boundary, level, &plan, *exec, &|x| {
                    let xw = word_eval(x, w).expect("alphabet checked");
                    let fx = series_eval(f, x, r).expect("alphabet checked");
                    linalg::trace(&(xw.adjoint() * fx)) / level as f64
                })?)
            }
        };
        rows.push(RecoveryRow { level, value: value.scaled(scale) });
    }
    Ok(RecoveryTable { word: w.clone(), r, rows })
}

/// Series form of `φ_{f,g}(r) = Σ_l r^{2l} weight(l) Σ_{|w|=l} conj(g_w) f_w`.
pub fn radial_pairing(f: &NcSeries, g: &NcSeries, kind: SpaceKind, r_grid: &[f64]) -> Result<Vec<(f64, Complex64)>> {
    kind.check(f)?;
    kind.check(g)?;
    let mut strata: Vec<Complex64> = vec![ZERO; f.degree().min(g.degree()) + 1];
    for (w, &a) in f.terms() {
        let b = g.coeff(w);
        if b != ZERO {
            strata[w.len()] += a * b.conj() * kind.weight(w.len());
        }
    }
    Ok(r_grid
        .iter()
        .map(|&r| {
            let value = strata
                .iter()
                .enumerate()
                .map(|(l, &s)| s * r.powi(2 * l as i32))
                .sum();
            (r, value)
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct GridCell {
    pub r: f64,
    pub level: usize,
    pub value: Evaluated,
}

fn check_grids(r_grid: &[f64], levels: &[usize]) -> Result<()> {
    if r_grid.is_empty() || levels.is_empty() {
        return Err(Error::Domain("grids must be nonempty".into()));
    }
    if let Some(r) = r_grid.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::Domain(format!("scale must be nonnegative, got {r}")));
    }
    Ok(())
}

fn pairing_grid(
    f: &NcSeries,
    kind: BoundaryKind,
    r_grid: &[f64],
    levels: &[usize],
    engine: &Engine<'_>,
) -> Result<Vec<GridCell>> {
    let mut cells = Vec::with_capacity(r_grid.len() * levels.len());
    for (i, &r) in r_grid.iter().enumerate() {
        for &level in levels {
            let engine = match engine {
                Engine::MonteCarlo { plan, exec } => Engine::MonteCarlo { plan: cell_stream(plan, i, level), exec: *exec },
                e => *e,
            };
            let value = boundary_pairing(f, f, r, kind, level, &engine)?;
            cells.push(GridCell { r, level, value });
        }
    }
    Ok(cells)
}

/// Boundary norms over an `(r, N)` grid.
#[derive(Clone, Debug)]
pub struct NormProfile {
    pub cells: Vec<GridCell>,
    /// Grid maximum, an estimate of `S(f)` from below.
    pub sup_estimate: f64,
    /// Cell at the largest `N` and largest `r`.
    pub corner: GridCell,
    /// `‖f‖²` in the Hardy space.
    pub norm_sq: f64,
}

pub fn boundary_norm_profile(
    f: &NcSeries,
    kind: SpaceKind,
    r_grid: &[f64],
    levels: &[usize],
    engine: &Engine<'_>,
) -> Result<NormProfile> {
    kind.check(f)?;
    check_grids(r_grid, levels)?;
    let cells = pairing_grid(f, kind.boundary(), r_grid, levels, engine)?;
    let sup_estimate = cells.iter().map(|c| c.value.value().re).fold(f64::NEG_INFINITY, f64::max);
    let r_max = r_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_max = *levels.iter().max().expect("nonempty");
    let corner = cells
        .iter()
        .find(|c| c.r == r_max && c.level == n_max)
        .expect("corner is on the grid")
        .clone();
    let norm_sq = inner_product(f, f, kind)?.re;
    Ok(NormProfile { cells, sup_estimate, corner, norm_sq })
}

/// `Φ` (polydisc) and `Ψ` (ball) boundary tables with their series predictions.
#[derive(Clone, Debug)]
pub struct RadialProfiles {
    pub phi: Vec<GridCell>,
    pub psi: Vec<GridCell>,
    pub phi_series: Vec<(f64, f64)>,
    pub psi_series: Vec<(f64, f64)>,
}

pub fn radial_boundary_profiles(
    f: &NcSeries,
    r_grid: &[f64],
    levels: &[usize],
    engine: &Engine<'_>,
) -> Result<RadialProfiles> {
    check_grids(r_grid, levels)?;
    let m = f.alphabet();
    let (poly, ball) = (SpaceKind::Polydisc(m), SpaceKind::Ball(m));
    let real = |v: Vec<(f64, Complex64)>| v.into_iter().map(|(r, z)| (r, z.re)).collect();
    Ok(RadialProfiles {
        phi: pairing_grid(f, poly.boundary(), r_grid, levels, engine)?,
        psi: pairing_grid(f, ball.boundary(), r_grid, levels, engine)?,
        phi_series: real(radial_pairing(f, f, poly, r_grid)?),
        psi_series: real(radial_pairing(f, f, ball, r_grid)?),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UpsilonStatus {
    ConvergedWithBound(f64),
    DivergedAtDegree(usize),
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpsilonVerdict {
    pub status: UpsilonStatus,
    pub checked_degree: usize,
    /// `‖Σ_{|w| ≤ l} p^{|w|} (X^w)^* X^w‖` for `l = 0, …, checked_degree`.
    pub partial_sum_norms: Vec<f64>,
    /// Largest eigenvalue of `p Σ X_i^* X_i`.
    pub theta: f64,
}

pub const DEFAULT_UPSILON_DEGREE: usize = 256;
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 100.0;

/// Stratum `S_{l+1} = p Σ_k X_k^* S_l X_k`, so `S_l = Σ_{|w|=l} p^l (X^w)^* X^w`.
fn next_stratum(x: &MatrixTuple, s: &CMatrix, p: f64) -> CMatrix {
    let mut out = CMatrix::zeros(x.dim(), x.dim());
    for a in x.matrices() {
        out += a.adjoint() * s * a;
    }
    out * Complex64::new(p, 0.0)
}

/// Decides whether `Σ_w p^{|w|} (X^w)^* X^w` converges.
///
/// `θ < 1` settles it with the bound `1/(1-θ)`. Otherwise the partial sums
/// are accumulated: a vanishing stratum means the series is finite, while a
/// partial sum above `threshold` whose strata stopped decaying is reported as
/// divergent. Everything else is inconclusive.
pub fn upsilon_membership(x: &MatrixTuple, p: f64, max_degree: usize, threshold: f64) -> Result<UpsilonVerdict> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("weight p must be positive, got {p}")));
    }
    let theta = words::spectral_theta(x, p);
    let n = x.dim();
    let mut stratum = linalg::identity(n);
    let mut partial = stratum.clone();
    let mut partial_sum_norms = vec![linalg::operator_norm(&partial)];
    let mut stratum_norms = vec![linalg::operator_norm(&stratum)];
    let fast = theta < 1.0;
    let mut status = None;
    for l in 1..=max_degree {
        stratum = next_stratum(x, &stratum, p);
        let sn = linalg::operator_norm(&stratum);
        let largest = stratum_norms.iter().copied().fold(0.0, f64::max);
        // rounding residue of an exactly vanishing stratum
        let vanished = sn <= 1e-13 * largest;
        if !vanished {
            partial += &stratum;
        }
        partial_sum_norms.push(linalg::operator_norm(&partial));
        stratum_norms.push(sn);
        if fast {
            continue;
        }
        if vanished {
            status = Some(UpsilonStatus::ConvergedWithBound(*partial_sum_norms.last().unwrap()));
            break;
        }
        let back = l.min(8);
        let non_decaying = sn >= stratum_norms[l - back] * (1.0 - 1e-12);
        if *partial_sum_norms.last().unwrap() > threshold && non_decaying {
            status = Some(UpsilonStatus::DivergedAtDegree(l));
            break;
        }
    }
    let status = if fast {
        UpsilonStatus::ConvergedWithBound(1.0 / (1.0 - theta))
    } else {
        status.unwrap_or(UpsilonStatus::Inconclusive)
    };
    Ok(UpsilonVerdict { status, checked_degree: partial_sum_norms.len() - 1, partial_sum_norms, theta })
}

#[derive(Clone, Debug)]
pub struct KernelValue {
    /// `(N·M) × (N·M)` matrix on `ℂ^N ⊗ ℂ^M`.
    pub value: CMatrix,
    pub truncation_degree: usize,
    /// Present iff both arguments satisfy `θ < 1`.
    pub tail_bound: Option<f64>,
}

/// `Σ_{l ≤ L} Σ_{|w| = l} p^l X^w ⊗ (Y^w)^*`.
///
/// The remainder factors as a row of `I ⊗ (Y^w)^*` times a column of
/// `X^w ⊗ I` over `|w| > L`, which bounds it by
/// `(θ_X^{L+1}/(1-θ_X))^{1/2} (θ_Y^{L+1}/(1-θ_Y))^{1/2}`.
pub fn kernel_eval(x: &MatrixTuple, y: &MatrixTuple, p: f64, max_degree: usize) -> Result<KernelValue> {
    if x.alphabet() != y.alphabet() {
        return Err(Error::AlphabetMismatch { expected: x.alphabet(), found: y.alphabet() });
    }
    if !(p > 0.0) {
        return Err(Error::Domain(format!("weight p must be positive, got {p}")));
    }
    let (n, m) = (x.dim(), y.dim());
    let (id_n, id_m) = (linalg::identity(n), linalg::identity(m));
    let left: Vec<CMatrix> = x.matrices().iter().map(|a| linalg::kron(a, &id_m)).collect();
    let right: Vec<CMatrix> = y.matrices().iter().map(|b| linalg::kron(&id_n, &b.adjoint())).collect();
    let mut term = linalg::identity(n * m);
    let mut value = term.clone();
    for _ in 0..max_degree {
        let mut next = CMatrix::zeros(n * m, n * m);
        for (l, r) in left.iter().zip(&right) {
            next += l * &term * r;
        }
        term = next * Complex64::new(p, 0.0);
        value += &term;
    }
    let (tx, ty) = (words::spectral_theta(x, p), words::spectral_theta(y, p));
    let tail_bound = (tx < 1.0 && ty < 1.0).then(|| {
        let e = (max_degree + 1) as i32;
        (tx.powi(e) / (1.0 - tx)).sqrt() * (ty.powi(e) / (1.0 - ty)).sqrt()
    });
    Ok(KernelValue { value, truncation_degree: max_degree, tail_bound })
}

/// `S A S^*` for `A` on `ℂ^a ⊗ ℂ^b`, with `S` the flip onto `ℂ^b ⊗ ℂ^a`.
pub fn swap_factors(mat: &CMatrix, a: usize, b: usize) -> CMatrix {
    let idx = |i: usize, j: usize| i * b + j;
    CMatrix::from_fn(a * b, a * b, |row, col| {
        let (j, i) = (row / a, row % a);
        let (l, k) = (col / a, col % a);
        mat[(idx(i, j), idx(k, l))]
    })
}

/// The block Gram `G[(i,a,b),(j,d,c)] = K_p(X_i, X_j)[(a,c),(b,d)]` over a
/// family of equal-dimension tuples, i.e. `Σ_w p^{|w|} vec(X^w_i) vec(X^w_j)^*`,
/// together with the largest pairwise tail bound.
pub fn kernel_block_gram(points: &[MatrixTuple], p: f64, max_degree: usize) -> Result<(CMatrix, Option<f64>)> {
    let Some(first) = points.first() else {
        return Ok((CMatrix::zeros(0, 0), Some(0.0)));
    };
    let n = first.dim();
    if let Some(bad) = points.iter().find(|x| x.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
    }
    let k = points.len();
    let nn = n * n;
    let mut gram = CMatrix::zeros(k * nn, k * nn);
    let mut tail: Option<f64> = Some(0.0);
    for (i, xi) in points.iter().enumerate() {
        for (j, xj) in points.iter().enumerate() {
            let kv = kernel_eval(xi, xj, p, max_degree)?;
            tail = match (tail, kv.tail_bound) {
                (Some(t), Some(u)) => Some(t.max(u)),
                _ => None,
            };
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            gram[(i * nn + a * n + b, j * nn + d * n + c)] = kv.value[(a * n + c, b * n + d)];
                        }
                    }
                }
            }
        }
    }
    Ok((gram, tail))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReproduceCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// Compares `⟨f, e_1^* K_p(·, Y) e_2⟩_{ℓ²_p}` with `e_2^* f(Y) e_1`.
///
/// The kernel section has coefficients `k_w = p^{|w|} e_1^* (Y^w)^* e_2`; the
/// pairing only involves words in the support of `f`, so it is exact.
pub fn reproduce_check(
    f: &NcSeries,
    y: &MatrixTuple,
    e1: &[Complex64],
    e2: &[Complex64],
    p: f64,
) -> Result<ReproduceCheck> {
    if f.alphabet() != y.alphabet() {
        return Err(Error::AlphabetMismatch { expected: y.alphabet(), found: f.alphabet() });
    }
    if !(p > 0.0) {
        return Err(Error::Domain(format!("weight p must be positive, got {p}")));
    }
    for e in [e1, e2] {
        if e.len() != y.dim() {
            return Err(Error::DimensionMismatch { expected: y.dim(), found: e.len() });
        }
    }
    let bilinear = |a: &CMatrix| -> Complex64 {
        // u^* A v with u = e1, v = e2
        let mut acc = ZERO;
        for (i, ui) in e1.iter().enumerate() {
            for (j, vj) in e2.iter().enumerate() {
                acc += ui.conj() * a[(i, j)] * vj;
            }
        }
        acc
    };
    let mut lhs = ZERO;
    for (w, &c) in f.terms() {
        let yw = word_eval(y, w)?;
        let pw = p.powi(w.len() as i32);
        let k_w = bilinear(&yw.adjoint()) * pw;
        lhs += c * k_w.conj() / pw;
    }
    let fy = series_eval(f, y, 1.0)?;
    let mut rhs = ZERO;
    for (i, ui) in e2.iter().enumerate() {
        for (j, vj) in e1.iter().enumerate() {
            rhs += ui.conj() * fy[(i, j)] * vj;
        }
    }
    Ok(ReproduceCheck { lhs, rhs, residual: (lhs - rhs).norm() })
}
