//! Haar sampling of the distinguished boundaries and seeded Monte Carlo
//! estimation of tracial integrals.
//!
//! Estimates are reproducible bit-for-bit: the sample range is cut into
//! fixed-size chunks, chunk `k` draws from its own derived ChaCha stream, and
//! chunk statistics are merged by a fixed-shape pairwise tree. How chunks are
//! scheduled (see [`Executor`]) does not affect the result.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Complex64, ONE, ZERO};
use crate::weingarten::BoundaryKind;
use crate::words::{series_eval, MatrixTuple, NcSeries};

/// Default seed when neither a flag nor the environment provides one.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// A `(seed, stream_id)` pair naming one reproducible random sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        SeededStream { seed, stream_id: 0 }
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        SeededStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A child stream; distinct `index` values give distinct stream ids.
    pub fn derive(&self, index: u64) -> SeededStream {
        SeededStream {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1))),
        }
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Haar-distributed `n × n` unitary: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q.column_mut(j).scale_mut_complex(phase);
    }
    q
}

trait ScaleColumn {
    fn scale_mut_complex(&mut self, s: Complex64);
}

impl<S> ScaleColumn for nalgebra::Matrix<Complex64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<Complex64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, s: Complex64) {
        for z in self.iter_mut() {
            *z *= s;
        }
    }
}

/// One point of the distinguished boundary of `kind` at level `n`.
pub fn sample_boundary<R: Rng + ?Sized>(kind: BoundaryKind, n: usize, rng: &mut R) -> MatrixTuple {
    let m = kind.alphabet();
    let mats = match kind {
        BoundaryKind::Polydisc(_) => (0..m).map(|_| sample_haar_unitary(n, rng)).collect(),
        BoundaryKind::BallColumn(_) => {
            let u = sample_haar_unitary(m * n, rng);
            (0..m).map(|k| u.view((k * n, 0), (n, n)).into_owned()).collect()
        }
        BoundaryKind::BallRow(_) => {
            let u = sample_haar_unitary(m * n, rng);
            (0..m).map(|k| u.view((0, k * n), (n, n)).into_owned()).collect()
        }
    };
    MatrixTuple::new(mats).expect("boundary blocks are square and equal-sized")
}

/// Result of a sampled integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCEstimate {
    pub mean: Complex64,
    /// Sample standard deviation over `√samples`.
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// `|mean - exact|` in units of the standard error; a floor of `1e-12`
    /// keeps zero-variance integrands from turning rounding into failures.
    pub fn deviation(&self, exact: Complex64) -> f64 {
        (self.mean - exact).norm() / self.std_error.max(1e-12 * exact.norm().max(1.0))
    }

    pub fn agrees_with(&self, exact: Complex64, sigmas: f64) -> bool {
        self.deviation(exact) <= sigmas
    }
}

/// Streaming first and second moments of complex samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: Complex64,
    /// `Σ |x - mean|²`.
    pub m2: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Moments { count: 0, mean: ZERO, m2: 0.0 }
    }
}

impl Moments {
    pub fn push(&mut self, x: Complex64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += (delta.conj() * (x - self.mean)).re;
    }

    /// Pairwise combination of two disjoint sample sets.
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Moments {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta.norm_sqr() * self.count as f64 * w,
        }
    }

    pub fn finish(&self, seed: u64) -> MCEstimate {
        let var = if self.count > 1 { self.m2 / (self.count - 1) as f64 } else { 0.0 };
        MCEstimate {
            mean: self.mean,
            std_error: (var / self.count as f64).sqrt(),
            samples: self.count,
            seed,
        }
    }
}

/// Reduces in a fixed balanced-tree order.
pub fn tree_reduce(items: &[Moments]) -> Moments {
    match items.len() {
        0 => Moments::default(),
        1 => items[0],
        len => {
            let (left, right) = items.split_at(len / 2);
            tree_reduce(left).merge(&tree_reduce(right))
        }
    }
}

/// A chunk job: chunk index to one [`Moments`] per output.
pub type ChunkJob<'a> = dyn Fn(usize) -> Vec<Moments> + Sync + 'a;

/// Runs independent chunk jobs and returns their results in chunk order.
pub trait Executor: Sync {
    fn run(&self, chunks: usize, job: &ChunkJob<'_>) -> Vec<Vec<Moments>>;
}

/// Runs chunks one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn run(&self, chunks: usize, job: &ChunkJob<'_>) -> Vec<Vec<Moments>> {
        (0..chunks).map(job).collect()
    }
}

/// Sample count, stream and chunking of one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McPlan {
    pub samples: usize,
    pub stream: SeededStream,
    pub chunk_size: usize,
}

impl McPlan {
    pub const DEFAULT_CHUNK: usize = 256;

    pub fn new(samples: usize, stream: SeededStream) -> Self {
        McPlan { samples, stream, chunk_size: Self::DEFAULT_CHUNK }
    }

    /// Same plan on a derived stream, for independent sub-estimates.
    pub fn derive(&self, index: u64) -> Self {
        McPlan { stream: self.stream.derive(index), ..*self }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::Domain(format!("need at least 2 samples, got {}", self.samples)));
        }
        if self.chunk_size == 0 {
            return Err(Error::Domain("chunk size must be positive".into()));
        }
        Ok(())
    }

    fn chunks(&self) -> usize {
        self.samples.div_ceil(self.chunk_size)
    }
}

/// Vector-valued integrand: writes one value per output slot.
pub type Integrand<'a> = dyn Fn(&MatrixTuple, &mut [Complex64]) + Sync + 'a;

/// Estimates `outputs` integrals over the boundary `kind` at level `n` from a
/// shared set of samples.
pub fn estimate_many(
    kind: BoundaryKind,
    level: usize,
    plan: &McPlan,
    exec: &dyn Executor,
    outputs: usize,
    integrand: &Integrand<'_>,
) -> Result<Vec<MCEstimate>> {
    kind.validate()?;
    plan.validate()?;
    if level == 0 {
        return Err(Error::Domain("level N must be at least 1".into()));
    }
    let job = |chunk: usize| {
        let start = chunk * plan.chunk_size;
        let end = (start + plan.chunk_size).min(plan.samples);
        let mut rng = plan.stream.derive(chunk as u64).rng();
        let mut acc = vec![Moments::default(); outputs];
        let mut buf = vec![ZERO; outputs];
        for _ in start..end {
            let x = sample_boundary(kind, level, &mut rng);
            integrand(&x, &mut buf);
            for (a, &v) in acc.iter_mut().zip(&buf) {
                a.push(v);
            }
        }
        acc
    };
    let per_chunk = exec.run(plan.chunks(), &job);
    Ok((0..outputs)
        .map(|k| {
            let column: Vec<Moments> = per_chunk.iter().map(|c| c[k]).collect();
            tree_reduce(&column).finish(plan.stream.seed)
        })
        .collect())
}

pub fn estimate(
    kind: BoundaryKind,
    level: usize,
    plan: &McPlan,
    exec: &dyn Executor,
    integrand: &(dyn Fn(&MatrixTuple) -> Complex64 + Sync),
) -> Result<MCEstimate> {
    let many = estimate_many(kind, level, plan, exec, 1, &|x, out| out[0] = integrand(x))?;
    Ok(many[0])
}

/// Sampled `∫ (1/N) Tr(g(rX)^* f(rX)) dω_N`.
pub fn mc_pairing(
    f: &NcSeries,
    g: &NcSeries,
    r: f64,
    kind: BoundaryKind,
    level: usize,
    plan: &McPlan,
    exec: &dyn Executor,
) -> Result<MCEstimate> {
    let m = kind.alphabet();
    for s in [f, g] {
        if s.alphabet() != m {
            return Err(Error::AlphabetMismatch { expected: m, found: s.alphabet() });
        }
    }
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("scale must be nonnegative, got {r}")));
    }
    estimate(kind, level, plan, exec, &|x| {
        let fx = series_eval(f, x, r).expect("alphabet checked");
        let gx = series_eval(g, x, r).expect("alphabet checked");
        linalg::trace(&(gx.adjoint() * fx)) / level as f64
    })
}

/// A Laurent polynomial `Σ_α c_α U_k^α` in one Haar unitary `U_k`; negative
/// powers are powers of `U_k^*`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeFactor {
    /// 1-based ensemble (letter) index.
    pub ensemble: usize,
    pub terms: Vec<(i32, Complex64)>,
}

impl FreeFactor {
    pub fn monomial(ensemble: usize, power: i32) -> Self {
        FreeFactor { ensemble, terms: vec![(power, ONE)] }
    }

    fn eval(&self, u: &CMatrix) -> CMatrix {
        let n = u.nrows();
        let mut acc = CMatrix::zeros(n, n);
        for &(power, c) in &self.terms {
            let base = if power < 0 { u.adjoint() } else { u.clone() };
            let mut p = linalg::identity(n);
            for _ in 0..power.unsigned_abs() {
                p = &p * &base;
            }
            acc += p.map(|z| z * c);
        }
        acc
    }

    /// A factor is centered iff it has no constant term, since
    /// `∫ Tr(U^α) dU = 0` for every `α ≠ 0`.
    fn is_centered(&self) -> bool {
        let mut constant = ZERO;
        let mut any = false;
        for &(power, c) in &self.terms {
            if c != ZERO {
                any = true;
                if power == 0 {
                    constant += c;
                }
            }
        }
        any && constant == ZERO
    }
}

/// Checks the alternating-centered structure of a product `p_1 ⋯ p_k`.
pub fn validate_alternating(factors: &[FreeFactor]) -> Result<()> {
    if factors.is_empty() {
        return Err(Error::Structure("empty product".into()));
    }
    for (i, f) in factors.iter().enumerate() {
        if f.ensemble == 0 {
            return Err(Error::Structure(format!("factor {i}: ensembles are 1-based")));
        }
        if !f.is_centered() {
            return Err(Error::Structure(format!("factor {i} is not centered")));
        }
    }
    for (i, pair) in factors.windows(2).enumerate() {
        if pair[0].ensemble == pair[1].ensemble {
            return Err(Error::Structure(format!(
                "factors {i} and {} both come from ensemble {}",
                i + 1,
                pair[0].ensemble
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct FreenessRow {
    pub level: usize,
    pub estimate: MCEstimate,
    /// `|mean| + 3·SE`, an upper confidence bound on `|∫ (1/N) Tr(p_1 ⋯ p_k)|`.
    pub upper_bound: f64,
}

#[derive(Clone, Debug)]
pub struct FreenessReport {
    pub rows: Vec<FreenessRow>,
    /// The upper confidence bound decreases strictly along the grid.
    pub bound_monotone: bool,
    /// Number of consecutive grid pairs along which `|mean|` decreases.
    pub decreasing_pairs: usize,
    /// Least-squares slope of `log |mean|` against `log N`.
    pub log_slope: f64,
}

/// Samples `∫ (1/N) Tr(p_1 ⋯ p_k) dμ_N` for each level on the grid.
pub fn freeness_diagnostic(
    factors: &[FreeFactor],
    levels: &[usize],
    samples: usize,
    stream: SeededStream,
    exec: &dyn Executor,
) -> Result<FreenessReport> {
    validate_alternating(factors)?;
    if levels.is_empty() {
        return Err(Error::Domain("level grid is empty".into()));
    }
    let m = factors.iter().map(|f| f.ensemble).max().unwrap_or(1);
    let kind = BoundaryKind::Polydisc(m);
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let plan = McPlan::new(samples, stream.derive(level as u64));
        let est = estimate(kind, level, &plan, exec, &|x| {
            let mut prod = linalg::identity(level);
            for f in factors {
                prod *= f.eval(x.matrix(f.ensemble));
            }
            linalg::trace(&prod) / level as f64
        })?;
        rows.push(FreenessRow { level, upper_bound: est.mean.norm() + 3.0 * est.std_error, estimate: est });
    }
    let bound_monotone = rows.windows(2).all(|p| p[1].upper_bound < p[0].upper_bound);
    let decreasing_pairs = rows
        .windows(2)
        .filter(|p| p[1].estimate.mean.norm() < p[0].estimate.mean.norm())
        .count();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.estimate.mean.norm() > 0.0)
        .map(|r| ((r.level as f64).ln(), r.estimate.mean.norm().ln()))
        .collect();
    Ok(FreenessReport { rows, bound_monotone, decreasing_pairs, log_slope: slope(&pts) })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, frobenius_norm};
    use crate::words::Word;

    fn unitarity_defect(u: &CMatrix) -> f64 {
        frobenius_norm(&(u.adjoint() * u - linalg::identity(u.nrows())))
    }

    #[test]
    fn samples_are_unitary() {
        let mut rng = SeededStream::new(7).rng();
        for n in [1, 2, 3, 5, 8, 16, 32] {
            for _ in 0..5 {
                assert!(unitarity_defect(&sample_haar_unitary(n, &mut rng)) <= 1e-12);
            }
        }
    }

    #[test]
    fn boundary_constraints_hold() {
        let mut rng = SeededStream::new(11).rng();
        for m in 1..=3 {
            for n in [1, 2, 4] {
                let x = sample_boundary(BoundaryKind::BallColumn(m), n, &mut rng);
                assert!(frobenius_norm(&(x.column_gram() - linalg::identity(n))) <= 1e-12);
                let x = sample_boundary(BoundaryKind::BallRow(m), n, &mut rng);
                assert!(frobenius_norm(&(x.row_gram() - linalg::identity(n))) <= 1e-12);
                let x = sample_boundary(BoundaryKind::Polydisc(m), n, &mut rng);
                for a in x.matrices() {
                    assert!(unitarity_defect(a) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn same_stream_same_samples() {
        let s = SeededStream::with_stream(3, 9);
        let a = sample_haar_unitary(4, &mut s.rng());
        let b = sample_haar_unitary(4, &mut s.rng());
        assert_eq!(a, b);
        let other = sample_haar_unitary(4, &mut s.derive(0).rng());
        assert_ne!(a, other);
        assert_ne!(s.derive(0), s.derive(1));
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<Complex64> = (0..37).map(|i| c((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let parts: Vec<Moments> = xs
            .chunks(5)
            .map(|ch| {
                let mut m = Moments::default();
                ch.iter().for_each(|&x| m.push(x));
                m
            })
            .collect();
        let merged = tree_reduce(&parts);
        assert_eq!(merged.count, whole.count);
        assert!((merged.mean - whole.mean).norm() < 1e-14);
        assert!((merged.m2 - whole.m2).abs() < 1e-12);
    }

    #[test]
    fn constant_integrand_has_zero_spread() {
        let x1 = NcSeries::monomial(1, Word::new(&[1]).unwrap(), ONE).unwrap();
        let plan = McPlan::new(300, SeededStream::new(1));
        let est = mc_pairing(&x1, &x1, 0.5, BoundaryKind::Polydisc(1), 3, &plan, &Sequential).unwrap();
        assert!((est.mean - c(0.25, 0.0)).norm() < 1e-14);
        assert!(est.std_error < 1e-14);
        assert!(est.agrees_with(c(0.25, 0.0), 3.0));
        assert_eq!(est.samples, 300);
    }

    #[test]
    fn too_few_samples_rejected() {
        let plan = McPlan::new(1, SeededStream::new(1));
        assert!(estimate(BoundaryKind::Polydisc(1), 2, &plan, &Sequential, &|_| ONE).is_err());
    }

    #[test]
    fn freeness_structure_checks() {
        let constant = FreeFactor { ensemble: 1, terms: vec![(0, ONE)] };
        assert!(matches!(validate_alternating(&[constant]), Err(Error::Structure(_))));
        let same = [FreeFactor::monomial(1, 1), FreeFactor::monomial(1, -1)];
        assert!(matches!(validate_alternating(&same), Err(Error::Structure(_))));
        let ok = [FreeFactor::monomial(1, 1), FreeFactor::monomial(2, 1), FreeFactor::monomial(1, 2)];
        assert!(validate_alternating(&ok).is_ok());
        assert!(validate_alternating(&[]).is_err());
    }
}
