//! Exact Weingarten calculus on `U(N)`.
//!
//! `Wg(N, ·)` is the class function on `S_n` obtained by inverting the Gram
//! matrix `G(σ, τ) = N^{#(στ^{-1})}`. Because `G` commutes with conjugation,
//! the inverse applied to the indicator of the identity is itself a class
//! function, so the solve is carried out on the `p(n) × p(n)` system of
//! conjugacy classes in exact rational arithmetic. The full `n! × n!` Gram
//! matrix is only used to check the residual of the cached values.
//!
//! On top of the table sit the entry-moment formula
//!
//! ```text
//! ∫ u_{i_1 j_1} ⋯ u_{i_n j_n} ū_{i'_1 j'_1} ⋯ ū_{i'_n j'_n} dU
//!     = Σ_{σ,τ ∈ S_n} Wg(N, τσ^{-1}) Π_k δ(i_k, i'_{σ(k)}) δ(j_k, j'_{τ(k)})
//! ```
//!
//! and exact single-trace pairings `∫ Tr((X^w)^* X^v)` over the distinguished
//! boundaries of the polydisc and the (column or row) ball.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

pub use num_bigint::BigInt;
pub use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{Complex64, ZERO};
use crate::perm::{self, CycleType, Permutation};
use crate::words::{NcSeries, Word};

/// Largest permutation order the table accepts by default.
pub const DEFAULT_MAX_N: usize = 6;

/// Distinguished boundary carrying the integration measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// `U(N)^m` with the product Haar measure.
    Polydisc(usize),
    /// Blocks of the first `mN × N` block column of a Haar `U(mN)`;
    /// `Σ X_i^* X_i = I_N`.
    BallColumn(usize),
    /// Blocks of the first `N × mN` block row of a Haar `U(mN)`;
    /// `Σ X_i X_i^* = I_N`.
    BallRow(usize),
}

impl BoundaryKind {
    pub fn alphabet(&self) -> usize {
        match *self {
            BoundaryKind::Polydisc(m) | BoundaryKind::BallColumn(m) | BoundaryKind::BallRow(m) => m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphabet() == 0 {
            return Err(Error::Domain("boundary alphabet size must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn cycle_count(sigma: &Permutation) -> usize {
    sigma.cycle_count()
}

/// `S_n` with a class lookup by lexicographic rank.
#[derive(Debug)]
pub struct SymmetricGroup {
    n: usize,
    elements: Vec<Permutation>,
    class_of: Vec<u8>,
    classes: Vec<CycleType>,
}

impl SymmetricGroup {
    pub fn new(n: usize) -> Self {
        let classes = perm::partitions(n);
        let elements = perm::all(n);
        let class_of = elements
            .iter()
            .map(|p| {
                let ct = p.cycle_type();
                classes.iter().position(|c| *c == ct).expect("partition list is complete") as u8
            })
            .collect();
        SymmetricGroup { n, elements, class_of, classes }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn classes(&self) -> &[CycleType] {
        &self.classes
    }

    pub fn class_index(&self, p: &Permutation) -> usize {
        self.class_of[p.rank()] as usize
    }

    pub fn identity_class(&self) -> usize {
        self.classes.len() - 1
    }
}

/// `Wg(N, ·)` on `S_n`, one value per cycle type.
#[derive(Clone, Debug)]
pub struct WgClassValues {
    pub n: usize,
    pub dim: usize,
    pub classes: Vec<CycleType>,
    pub exact: Vec<BigRational>,
    pub values: Vec<f64>,
}

impl WgClassValues {
    pub fn value_of(&self, ct: &CycleType) -> Option<f64> {
        self.classes.iter().position(|c| c == ct).map(|i| self.values[i])
    }
}

fn pow_int(base: usize, exp: usize) -> BigInt {
    num_traits::pow(BigInt::from(base), exp)
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Solves the class-reduced Gram system exactly.
fn solve_class_system(group: &SymmetricGroup, dim: usize) -> Result<Vec<BigRational>> {
    let k = group.classes.len();
    // a[row][col] = Σ_{τ ∈ C_col} N^{#(ρ_row τ^{-1})}
    let mut a = vec![vec![BigRational::zero(); k + 1]; k];
    for (row, ct) in group.classes.iter().enumerate() {
        let rho = ct.representative();
        let mut counts = vec![vec![0usize; group.n + 1]; k];
        for tau in &group.elements {
            let e = rho.compose(&tau.inverse()).cycle_count();
            counts[group.class_index(tau)][e] += 1;
        }
        for (col, by_exp) in counts.iter().enumerate() {
            let mut s = BigInt::zero();
            for (e, &cnt) in by_exp.iter().enumerate() {
                if cnt > 0 {
                    s += pow_int(dim, e) * BigInt::from(cnt);
                }
            }
            a[row][col] = BigRational::from_integer(s);
        }
    }
    a[group.identity_class()][k] = BigRational::one();

    // Gauss-Jordan with exact pivots
    for col in 0..k {
        let pivot = (col..k)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(Error::GramSingular { n: group.n, dim })?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in col..=k {
                    let delta = &factor * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[k].clone()).collect())
}

/// Shared cache of Weingarten values keyed by `(n, N)`.
///
/// Readers never block each other; a miss takes the write lock once.
pub struct WeingartenTable {
    max_n: usize,
    groups: spin::RwLock<BTreeMap<usize, Arc<SymmetricGroup>>>,
    entries: spin::RwLock<BTreeMap<(usize, usize), Arc<WgClassValues>>>,
}

impl Default for WeingartenTable {
    fn default() -> Self {
        WeingartenTable::new(DEFAULT_MAX_N)
    }
}

static GLOBAL: spin::Lazy<WeingartenTable> = spin::Lazy::new(WeingartenTable::default);

impl WeingartenTable {
    pub fn new(max_n: usize) -> Self {
        WeingartenTable {
            max_n,
            groups: spin::RwLock::new(BTreeMap::new()),
            entries: spin::RwLock::new(BTreeMap::new()),
        }
    }

    /// Process-wide table with `max_n = 6`.
    pub fn global() -> &'static WeingartenTable {
        &GLOBAL
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn group(&self, n: usize) -> Result<Arc<SymmetricGroup>> {
        if n > self.max_n {
            return Err(Error::UnsupportedMultiplicity { n, max: self.max_n });
        }
        if let Some(g) = self.groups.read().get(&n) {
            return Ok(g.clone());
        }
        let g = Arc::new(SymmetricGroup::new(n));
        Ok(self.groups.write().entry(n).or_insert(g).clone())
    }

    pub fn class_values(&self, n: usize, dim: usize) -> Result<Arc<WgClassValues>> {
        if n > self.max_n {
            return Err(Error::UnsupportedMultiplicity { n, max: self.max_n });
        }
        if dim < n || dim == 0 {
            return Err(Error::GramSingular { n, dim });
        }
        if let Some(v) = self.entries.read().get(&(n, dim)) {
            return Ok(v.clone());
        }
        let group = self.group(n)?;
        let exact = solve_class_system(&group, dim)?;
        let values = exact.iter().map(to_f64).collect();
        let entry = Arc::new(WgClassValues { n, dim, classes: group.classes.clone(), exact, values });
        Ok(self.entries.write().entry((n, dim)).or_insert(entry).clone())
    }

    /// Replaces a cached entry; used to inject a corrupted table in negative
    /// controls of the self-test.
    #[doc(hidden)]
    pub fn override_values(&self, n: usize, dim: usize, values: Vec<f64>) -> Result<()> {
        let current = self.class_values(n, dim)?;
        if values.len() != current.values.len() {
            return Err(Error::DimensionMismatch { expected: current.values.len(), found: values.len() });
        }
        let mut patched = (*current).clone();
        patched.values = values;
        self.entries.write().insert((n, dim), Arc::new(patched));
        Ok(())
    }

    pub fn weingarten(&self, n: usize, dim: usize, sigma: &Permutation) -> Result<f64> {
        self.check_order(n, sigma)?;
        let table = self.class_values(n, dim)?;
        let group = self.group(n)?;
        Ok(table.values[group.class_index(sigma)])
    }

    pub fn weingarten_exact(&self, n: usize, dim: usize, sigma: &Permutation) -> Result<BigRational> {
        self.check_order(n, sigma)?;
        let table = self.class_values(n, dim)?;
        let group = self.group(n)?;
        Ok(table.exact[group.class_index(sigma)].clone())
    }

    fn check_order(&self, n: usize, sigma: &Permutation) -> Result<()> {
        if sigma.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: sigma.len() });
        }
        Ok(())
    }

    /// `max_σ |Σ_τ N^{#(στ^{-1})} Wg(N, τ) - δ_{σ,id}|` over the full `S_n`,
    /// using the cached floating-point values.
    pub fn gram_residual(&self, n: usize, dim: usize) -> Result<f64> {
        let table = self.class_values(n, dim)?;
        let group = self.group(n)?;
        let wg: Vec<f64> = group.elements.iter().map(|t| table.values[group.class_index(t)]).collect();
        let inverses: Vec<Permutation> = group.elements.iter().map(Permutation::inverse).collect();
        let powers: Vec<f64> = (0..=n).map(|e| (dim as f64).powi(e as i32)).collect();
        let mut worst = 0.0_f64;
        for sigma in &group.elements {
            let mut sum = 0.0;
            let mut comp = 0.0;
            for (t_inv, &w) in inverses.iter().zip(&wg) {
                // Kahan summation
                let term = powers[sigma.compose(t_inv).cycle_count()] * w - comp;
                let next = sum + term;
                comp = (next - sum) - term;
                sum = next;
            }
            let target = if sigma.cycle_count() == n { 1.0 } else { 0.0 };
            worst = worst.max((sum - target).abs());
        }
        Ok(worst)
    }

    /// Exact value of the entry moment; indices are 1-based in `1..=N`.
    pub fn haar_entry_moment_exact(
        &self,
        ups: &[(usize, usize)],
        conjs: &[(usize, usize)],
        dim: usize,
    ) -> Result<BigRational> {
        for &(i, j) in ups.iter().chain(conjs) {
            for idx in [i, j] {
                if idx == 0 || idx > dim {
                    return Err(Error::IndexOutOfRange { index: idx, dim });
                }
            }
        }
        if ups.len() != conjs.len() {
            return Ok(BigRational::zero());
        }
        let n = ups.len();
        let table = self.class_values(n, dim)?;
        let group = self.group(n)?;
        let matching = |pick: fn(&(usize, usize)) -> usize| -> Vec<&Permutation> {
            group
                .elements
                .iter()
                .filter(|s| (0..n).all(|k| pick(&ups[k]) == pick(&conjs[s.apply(k)])))
                .collect()
        };
        let sigmas = matching(|p| p.0);
        let taus = matching(|p| p.1);
        let mut counts = vec![0i64; table.classes.len()];
        for s in &sigmas {
            let s_inv = s.inverse();
            for t in &taus {
                counts[group.class_index(&t.compose(&s_inv))] += 1;
            }
        }
        Ok(counts
            .iter()
            .zip(&table.exact)
            .filter(|(c, _)| **c != 0)
            .map(|(&c, v)| v * BigRational::from_integer(BigInt::from(c)))
            .fold(BigRational::zero(), |a, b| a + b))
    }

    pub fn haar_entry_moment(&self, ups: &[(usize, usize)], conjs: &[(usize, usize)], dim: usize) -> Result<f64> {
        Ok(to_f64(&self.haar_entry_moment_exact(ups, conjs, dim)?))
    }

    /// Exact `∫ Tr((X^w)^* X^v) dω_N` over the boundary `kind` at level `N`.
    pub fn pairing_moment_rational(
        &self,
        w: &Word,
        v: &Word,
        kind: BoundaryKind,
        level: usize,
    ) -> Result<BigRational> {
        kind.validate()?;
        let m = kind.alphabet();
        w.check_alphabet(m)?;
        v.check_alphabet(m)?;
        if level == 0 {
            return Err(Error::Domain("level N must be at least 1".into()));
        }
        // Block phases act as Haar-preserving symmetries on every boundary,
        // so any per-letter imbalance integrates to zero.
        let wc = w.letter_counts(m);
        if wc != v.letter_counts(m) {
            return Ok(BigRational::zero());
        }
        if w.is_empty() {
            return Ok(BigRational::from_integer(BigInt::from(level)));
        }
        PairingEngine::build(self, w, v, kind, level, &wc)?.evaluate()
    }

    pub fn pairing_moment_exact(&self, w: &Word, v: &Word, kind: BoundaryKind, level: usize) -> Result<f64> {
        Ok(to_f64(&self.pairing_moment_rational(w, v, kind, level)?))
    }

    /// `∫ (1/N) Tr(g(rX)^* f(rX)) dω_N` for polynomials `f`, `g`.
    pub fn sesquilinear_moment_exact(
        &self,
        f: &NcSeries,
        g: &NcSeries,
        r: f64,
        kind: BoundaryKind,
        level: usize,
    ) -> Result<Complex64> {
        let m = kind.alphabet();
        for s in [f, g] {
            if s.alphabet() != m {
                return Err(Error::AlphabetMismatch { expected: m, found: s.alphabet() });
            }
        }
        if !(r >= 0.0) {
            return Err(Error::Domain(alloc::format!("scale must be nonnegative, got {r}")));
        }
        let mut acc = ZERO;
        for (gw, gc) in g.terms() {
            for (fv, fc) in f.terms() {
                let moment = self.pairing_moment_exact(gw, fv, kind, level)?;
                if moment == 0.0 {
                    continue;
                }
                let scale = r.powi((gw.len() + fv.len()) as i32) * moment / level as f64;
                acc += gc.conj() * fc * scale;
            }
        }
        Ok(acc)
    }
}

pub fn weingarten(n: usize, dim: usize, sigma: &Permutation) -> Result<f64> {
    WeingartenTable::global().weingarten(n, dim, sigma)
}

pub fn haar_entry_moment(ups: &[(usize, usize)], conjs: &[(usize, usize)], dim: usize) -> Result<f64> {
    WeingartenTable::global().haar_entry_moment(ups, conjs, dim)
}

pub fn pairing_moment_exact(w: &Word, v: &Word, kind: BoundaryKind, level: usize) -> Result<f64> {
    WeingartenTable::global().pairing_moment_exact(w, v, kind, level)
}

pub fn sesquilinear_moment_exact(
    f: &NcSeries,
    g: &NcSeries,
    r: f64,
    kind: BoundaryKind,
    level: usize,
) -> Result<Complex64> {
    WeingartenTable::global().sesquilinear_moment_exact(f, g, r, kind, level)
}

/// An index of a unitary entry: a chain index of the trace plus a block
/// offset. Two such indices agree iff both components agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Slot {
    block: usize,
    chain: usize,
}

/// Valid pairings for one unitary: each entry is a list of chain merges.
struct UnitaryTerms {
    group: Arc<SymmetricGroup>,
    table: Arc<WgClassValues>,
    sigmas: Vec<(Permutation, Vec<(usize, usize)>)>,
    taus: Vec<(Permutation, Vec<(usize, usize)>)>,
}

struct PairingEngine {
    level: usize,
    chain_len: usize,
    unitaries: Vec<UnitaryTerms>,
}

impl PairingEngine {
    /// Expands `Tr(X_{w_t}^* ⋯ X_{w_1}^* X_{v_1} ⋯ X_{v_s})` into entry
    /// variables; factor `j` reads chain indices `c_j` (row) and `c_{j+1}`
    /// (column), cyclically.
    fn build(
        table: &WeingartenTable,
        w: &Word,
        v: &Word,
        kind: BoundaryKind,
        level: usize,
        counts: &[usize],
    ) -> Result<Self> {
        let m = kind.alphabet();
        let chain_len = w.len() + v.len();
        let n_unitaries = match kind {
            BoundaryKind::Polydisc(_) => m,
            _ => 1,
        };
        let mut ups: Vec<Vec<(Slot, Slot)>> = vec![Vec::new(); n_unitaries];
        let mut conjs: Vec<Vec<(Slot, Slot)>> = vec![Vec::new(); n_unitaries];

        let factors = w
            .letters()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .map(|l| (l, true))
            .chain(v.letters().map(|l| (l, false)));
        for (j, (letter, adjoint)) in factors.enumerate() {
            let a = j;
            let b = (j + 1) % chain_len;
            let off = letter - 1;
            // entry of the unitary as (row slot, column slot), before adjoint
            let (unitary, row_block, col_block) = match kind {
                BoundaryKind::Polydisc(_) => (off, 0, 0),
                BoundaryKind::BallColumn(_) => (0, off, 0),
                BoundaryKind::BallRow(_) => (0, 0, off),
            };
            if adjoint {
                // (X^*)[a, b] = conj(X[b, a])
                conjs[unitary].push((Slot { block: row_block, chain: b }, Slot { block: col_block, chain: a }));
            } else {
                ups[unitary].push((Slot { block: row_block, chain: a }, Slot { block: col_block, chain: b }));
            }
        }

        let mut unitaries = Vec::with_capacity(n_unitaries);
        for (u, (ups, conjs)) in ups.into_iter().zip(conjs).enumerate() {
            let n = ups.len();
            debug_assert_eq!(n, conjs.len());
            if n == 0 {
                continue;
            }
            let dim = match kind {
                BoundaryKind::Polydisc(_) => {
                    debug_assert_eq!(counts[u], n);
                    level
                }
                _ => m * level,
            };
            let wg = table.class_values(n, dim)?;
            let group = table.group(n)?;
            let pairings = |pick: fn(&(Slot, Slot)) -> Slot| {
                group
                    .elements
                    .iter()
                    .filter(|s| (0..n).all(|k| pick(&ups[k]).block == pick(&conjs[s.apply(k)]).block))
                    .map(|s| {
                        let merges = (0..n)
                            .map(|k| (pick(&ups[k]).chain, pick(&conjs[s.apply(k)]).chain))
                            .collect();
                        (s.clone(), merges)
                    })
                    .collect::<Vec<_>>()
            };
            let sigmas = pairings(|x| x.0);
            let taus = pairings(|x| x.1);
            unitaries.push(UnitaryTerms { group, table: wg, sigmas, taus });
        }
        Ok(PairingEngine { level, chain_len, unitaries })
    }

    fn evaluate(&self) -> Result<BigRational> {
        let mut counts: BTreeMap<(Vec<u8>, usize), i64> = BTreeMap::new();
        let uf: Vec<usize> = (0..self.chain_len).collect();
        let mut classes = Vec::with_capacity(self.unitaries.len());
        self.walk(0, &uf, &mut classes, &mut counts);

        let mut total = BigRational::zero();
        for ((classes, exp), count) in counts {
            if count == 0 {
                continue;
            }
            let mut term = BigRational::from_integer(BigInt::from(count) * pow_int(self.level, exp));
            for (u, &c) in classes.iter().enumerate() {
                term *= &self.unitaries[u].table.exact[c as usize];
            }
            total += term;
        }
        Ok(total)
    }

    fn walk(
        &self,
        u: usize,
        uf: &[usize],
        classes: &mut Vec<u8>,
        counts: &mut BTreeMap<(Vec<u8>, usize), i64>,
    ) {
        if u == self.unitaries.len() {
            let components = (0..uf.len()).filter(|&i| find(uf, i) == i).count();
            *counts.entry((classes.clone(), components)).or_insert(0) += 1;
            return;
        }
        let terms = &self.unitaries[u];
        for (sigma, row_merges) in &terms.sigmas {
            let mut after_rows = uf.to_vec();
            for &(a, b) in row_merges {
                union(&mut after_rows, a, b);
            }
            let sigma_inv = sigma.inverse();
            for (tau, col_merges) in &terms.taus {
                let mut after_cols = after_rows.clone();
                for &(a, b) in col_merges {
                    union(&mut after_cols, a, b);
                }
                classes.push(terms.group.class_index(&tau.compose(&sigma_inv)) as u8);
                self.walk(u + 1, &after_cols, classes, counts);
                classes.pop();
            }
        }
    }
}

fn find(uf: &[usize], mut i: usize) -> usize {
    while uf[i] != i {
        i = uf[i];
    }
    i
}

fn union(uf: &mut [usize], a: usize, b: usize) {
    let ra = find(uf, a);
    let rb = find(uf, b);
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        uf[hi] = lo;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ONE};

    fn w(letters: &[usize]) -> Word {
        Word::new(letters).unwrap()
    }

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn transposition() -> Permutation {
        Permutation::from_cycles(2, &[&[1, 2]]).unwrap()
    }

    #[test]
    fn first_order_values() {
        let t = WeingartenTable::default();
        for dim in 1..=9 {
            assert_eq!(t.weingarten_exact(1, dim, &Permutation::identity(1)).unwrap(), q(1, dim as i64));
        }
        for dim in 2..=9i64 {
            let id = t.weingarten_exact(2, dim as usize, &Permutation::identity(2)).unwrap();
            let tr = t.weingarten_exact(2, dim as usize, &transposition()).unwrap();
            assert_eq!(id, q(1, dim * dim - 1));
            assert_eq!(tr, q(-1, dim * (dim * dim - 1)));
        }
    }

    #[test]
    fn hand_inverted_two_by_two_gram() {
        // [[N², N], [N, N²]]^{-1} first column, solved by Cramer's rule in f64
        for dim in 2..=8 {
            let n = dim as f64;
            let det = n.powi(4) - n * n;
            let (id, tr) = (n * n / det, -n / det);
            assert!((weingarten(2, dim, &Permutation::identity(2)).unwrap() - id).abs() < 1e-15);
            assert!((weingarten(2, dim, &transposition()).unwrap() - tr).abs() < 1e-15);
        }
    }

    #[test]
    fn known_third_order_values() {
        // Collins' table: Wg([1,1,1]) = (N²-2)/(N(N²-1)(N²-4)),
        // Wg([2,1]) = -1/((N²-1)(N²-4)), Wg([3]) = 2/(N(N²-1)(N²-4)).
        let t = WeingartenTable::default();
        let dim = 5i64;
        let d = dim * (dim * dim - 1) * (dim * dim - 4);
        let vals = t.class_values(3, dim as usize).unwrap();
        let get = |parts: &[usize]| {
            let ct = CycleType::new(parts.to_vec()).unwrap();
            vals.exact[vals.classes.iter().position(|c| *c == ct).unwrap()].clone()
        };
        assert_eq!(get(&[1, 1, 1]), q(dim * dim - 2, d));
        assert_eq!(get(&[2, 1]), q(-1, (dim * dim - 1) * (dim * dim - 4)));
        assert_eq!(get(&[3]), q(2, d));
    }

    #[test]
    fn singular_and_unsupported_orders() {
        let t = WeingartenTable::default();
        assert!(matches!(
            t.weingarten(3, 2, &Permutation::identity(3)),
            Err(Error::GramSingular { n: 3, dim: 2 })
        ));
        assert!(matches!(
            t.weingarten(7, 8, &Permutation::identity(7)),
            Err(Error::UnsupportedMultiplicity { n: 7, max: 6 })
        ));
    }

    #[test]
    fn gram_residual_small() {
        let t = WeingartenTable::default();
        for n in 1..=4 {
            for dim in n..=8 {
                assert!(t.gram_residual(n, dim).unwrap() <= 1e-12, "n={n} N={dim}");
            }
        }
    }

    #[test]
    fn corrupted_entry_is_detected() {
        let t = WeingartenTable::default();
        let mut vals = t.class_values(2, 3).unwrap().values.clone();
        vals[0] *= 1.001;
        t.override_values(2, 3, vals).unwrap();
        assert!(t.gram_residual(2, 3).unwrap() > 1e-6);
    }

    #[test]
    fn entry_moment_examples() {
        for dim in 1..=5 {
            let v = haar_entry_moment(&[(1, 1)], &[(1, 1)], dim).unwrap();
            assert!((v - 1.0 / dim as f64).abs() < 1e-15);
        }
        assert_eq!(haar_entry_moment(&[(1, 1)], &[(1, 2)], 3).unwrap(), 0.0);
        let v = haar_entry_moment(&[(1, 1), (2, 2)], &[(1, 1), (2, 2)], 2).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(haar_entry_moment(&[(1, 1), (2, 2)], &[(1, 1)], 2).unwrap(), 0.0);
        assert!(matches!(
            haar_entry_moment(&[(3, 1)], &[(1, 1)], 2),
            Err(Error::IndexOutOfRange { index: 3, dim: 2 })
        ));
    }

    #[test]
    fn polydisc_pairing_examples() {
        for dim in 1..=5 {
            let k = BoundaryKind::Polydisc(2);
            assert_eq!(pairing_moment_exact(&w(&[1, 2]), &w(&[1, 2]), k, dim).unwrap(), dim as f64);
            assert_eq!(pairing_moment_exact(&w(&[1]), &w(&[1, 2]), k, dim).unwrap(), 0.0);
            let t = WeingartenTable::global();
            assert_eq!(t.pairing_moment_rational(&w(&[1, 2]), &w(&[2, 1]), k, dim).unwrap(), q(1, dim as i64));
        }
    }

    #[test]
    fn telescoping_is_exact() {
        let t = WeingartenTable::global();
        for word in [w(&[1, 1, 2]), w(&[2, 1, 2, 1]), w(&[1, 1, 1])] {
            for dim in 3..=5 {
                let v = t.pairing_moment_rational(&word, &word, BoundaryKind::Polydisc(2), dim).unwrap();
                assert_eq!(v, BigRational::from_integer(BigInt::from(dim)));
            }
        }
    }

    #[test]
    fn ball_block_normalization() {
        // (1/N) Tr(X_1^* X_1) integrates to 1/m on both ball boundaries
        let t = WeingartenTable::global();
        for m in 1..=3 {
            for dim in 1..=4 {
                for kind in [BoundaryKind::BallColumn(m), BoundaryKind::BallRow(m)] {
                    let v = t.pairing_moment_rational(&w(&[1]), &w(&[1]), kind, dim).unwrap();
                    assert_eq!(v, q(dim as i64, m as i64), "{kind:?} N={dim}");
                }
            }
        }
    }

    #[test]
    fn ball_column_isometry_sum() {
        // Σ_k Tr(X_k^* X_k) = Tr(I_N) = N, and Σ_k Tr((X_j X_k)^*(X_j X_k)) over
        // all j, k equals N as well, since Σ X_j^* X_j = I.
        let t = WeingartenTable::global();
        let m = 2;
        for dim in 1..=3 {
            let kind = BoundaryKind::BallColumn(m);
            let mut total = BigRational::zero();
            for word in Word::all_of_length(m, 2) {
                total += t.pairing_moment_rational(&word, &word, kind, dim).unwrap();
            }
            assert_eq!(total, BigRational::from_integer(BigInt::from(dim)));
        }
    }

    #[test]
    fn sesquilinear_examples() {
        let x1 = NcSeries::monomial(2, w(&[1]), ONE).unwrap();
        for dim in 1..=3 {
            for r in [0.0, 0.5, 1.0] {
                let v = sesquilinear_moment_exact(&x1, &x1, r, BoundaryKind::Polydisc(2), dim).unwrap();
                assert!((v - c(r * r, 0.0)).norm() < 1e-15);
            }
        }
        let f = NcSeries::from_terms(2, [(w(&[1, 2]), ONE), (w(&[2, 1]), ONE)]).unwrap();
        for dim in [1usize, 2, 4, 8] {
            let v = sesquilinear_moment_exact(&f, &f, 1.0, BoundaryKind::Polydisc(2), dim).unwrap();
            let expected = 2.0 * (1.0 + 1.0 / (dim * dim) as f64);
            assert!((v.re - expected).abs() < 1e-12 && v.im.abs() < 1e-15);
        }
        let zero = NcSeries::zero(2);
        assert_eq!(sesquilinear_moment_exact(&zero, &zero, 1.0, BoundaryKind::Polydisc(2), 3).unwrap(), ZERO);
    }
}
