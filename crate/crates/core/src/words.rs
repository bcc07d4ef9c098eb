//! Free-monoid words, sparse noncommutative power series and their
//! evaluation at tuples of square matrices.
//!
//! A [`Word`] `w = w_1 ⋯ w_l` over the alphabet `{1, …, m}` indexes the
//! monomial `X^w = X_{w_1} ⋯ X_{w_l}`; an [`NcSeries`] is a finitely supported
//! family of scalar coefficients `f_w`, read as `f(X) = Σ_w f_w X^w`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Complex64, ZERO};

/// A word over `{1, …, m}`; letters are stored 1-based, the alphabet size is
/// carried by the enclosing structure.
///
/// Words order first by length, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word from 1-based letters. Zero is never a valid letter.
    pub fn new(letters: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(letters.len());
        for &l in letters {
            if l == 0 || l > u8::MAX as usize {
                return Err(Error::LetterOutOfRange { letter: l, alphabet: u8::MAX as usize });
            }
            out.push(l as u8);
        }
        Ok(Word(out))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&l| l as usize)
    }

    pub fn letter_at(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&mut self, letter: usize) {
        debug_assert!(letter >= 1 && letter <= u8::MAX as usize);
        self.0.push(letter as u8);
    }

    /// Largest letter, 0 for the empty word.
    pub fn max_letter(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn check_alphabet(&self, m: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l as usize > m) {
            Some(&l) => Err(Error::LetterOutOfRange { letter: l as usize, alphabet: m }),
            None => Ok(()),
        }
    }

    /// Occurrence count of each letter; index `k - 1` holds the count of `k`.
    pub fn letter_counts(&self, m: usize) -> Vec<usize> {
        let mut counts = vec![0; m];
        for &l in &self.0 {
            counts[l as usize - 1] += 1;
        }
        counts
    }

    /// All words of length exactly `len` over `{1, …, m}`, in canonical order.
    pub fn all_of_length(m: usize, len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        for _ in 0..len {
            let mut next = Vec::with_capacity(out.len() * m);
            for w in &out {
                for k in 1..=m {
                    let mut x = w.clone();
                    x.push(k);
                    next.push(x);
                }
            }
            out = next;
        }
        out
    }

    /// All words of length at most `max_len`, in canonical order.
    pub fn all_up_to(m: usize, max_len: usize) -> Vec<Word> {
        (0..=max_len).flat_map(|l| Word::all_of_length(m, l)).collect()
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        f.write_str("(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(")")
    }
}

/// A finitely supported noncommutative power series with scalar coefficients.
///
/// Zero coefficients are never stored, so two series are equal iff their
/// stored maps are equal.
#[derive(Clone, Debug, PartialEq)]
pub struct NcSeries {
    m: usize,
    coeffs: BTreeMap<Word, Complex64>,
}

impl NcSeries {
    pub fn zero(m: usize) -> Self {
        NcSeries { m, coeffs: BTreeMap::new() }
    }

    pub fn monomial(m: usize, word: Word, coeff: Complex64) -> Result<Self> {
        let mut s = NcSeries::zero(m);
        s.add_term(word, coeff)?;
        Ok(s)
    }

    /// Builds a series from `(word, coefficient)` pairs; repeated words add up.
    pub fn from_terms<I>(m: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, Complex64)>,
    {
        let mut s = NcSeries::zero(m);
        for (w, c) in terms {
            s.add_term(w, c)?;
        }
        Ok(s)
    }

    /// Adds `coeff · X^word`, dropping the entry if it cancels to zero.
    pub fn add_term(&mut self, word: Word, coeff: Complex64) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Domain("alphabet size must be positive".into()));
        }
        word.check_alphabet(self.m)?;
        let entry = self.coeffs.entry(word);
        match entry {
            alloc::collections::btree_map::Entry::Occupied(mut e) => {
                let v = *e.get() + coeff;
                if v == ZERO {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            alloc::collections::btree_map::Entry::Vacant(e) => {
                if coeff != ZERO {
                    e.insert(coeff);
                }
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> usize {
        self.m
    }

    pub fn coeff(&self, w: &Word) -> Complex64 {
        self.coeffs.get(w).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest stored word length, 0 for the zero series.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(Word::len).max().unwrap_or(0)
    }

    /// The homogeneous part `f^[l]`.
    pub fn homogeneous(&self, l: usize) -> NcSeries {
        NcSeries {
            m: self.m,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(w, _)| w.len() == l)
                .map(|(w, c)| (w.clone(), *c))
                .collect(),
        }
    }

    pub fn scaled(&self, s: Complex64) -> NcSeries {
        if s == ZERO {
            return NcSeries::zero(self.m);
        }
        NcSeries {
            m: self.m,
            coeffs: self.coeffs.iter().map(|(w, c)| (w.clone(), c * s)).collect(),
        }
    }
}

/// A coefficient family `w ↦ f_w` whose ℓ²_p norm is known, possibly with
/// infinite support.
pub trait CoefficientSource {
    fn alphabet(&self) -> usize;
    fn coefficient(&self, w: &Word) -> Complex64;
    /// `‖f‖_{2,p}`; may be `f64::INFINITY`.
    fn l2p_norm(&self, p: f64) -> f64;
}

impl CoefficientSource for NcSeries {
    fn alphabet(&self) -> usize {
        self.m
    }

    fn coefficient(&self, w: &Word) -> Complex64 {
        self.coeff(w)
    }

    fn l2p_norm(&self, p: f64) -> f64 {
        l2p_norm(self, p).unwrap_or(f64::NAN)
    }
}

/// Coefficients given by a closure, with a caller-supplied ℓ²_p norm.
pub struct FnCoefficients<F, G> {
    pub m: usize,
    pub coeff: F,
    pub norm: G,
}

impl<F, G> CoefficientSource for FnCoefficients<F, G>
where
    F: Fn(&Word) -> Complex64,
    G: Fn(f64) -> f64,
{
    fn alphabet(&self) -> usize {
        self.m
    }

    fn coefficient(&self, w: &Word) -> Complex64 {
        (self.coeff)(w)
    }

    fn l2p_norm(&self, p: f64) -> f64 {
        (self.norm)(p)
    }
}

/// A point of `(ℂ^m)_nc` at level `n`: `m` complex `n × n` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple {
    dim: usize,
    mats: Vec<CMatrix>,
}

impl MatrixTuple {
    pub fn new(mats: Vec<CMatrix>) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| Error::Domain("a matrix tuple needs at least one matrix".into()))?;
        let dim = first.nrows();
        for a in &mats {
            if a.nrows() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: a.nrows() });
            }
            if a.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: a.ncols() });
            }
        }
        Ok(MatrixTuple { dim, mats })
    }

    pub fn zeros(m: usize, dim: usize) -> Self {
        MatrixTuple { dim, mats: vec![CMatrix::zeros(dim, dim); m] }
    }

    /// A level-1 tuple of scalars.
    pub fn scalars(values: &[Complex64]) -> Result<Self> {
        MatrixTuple::new(values.iter().map(|&z| CMatrix::from_element(1, 1, z)).collect())
    }

    pub fn alphabet(&self) -> usize {
        self.mats.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The matrix for a 1-based letter.
    pub fn matrix(&self, letter: usize) -> &CMatrix {
        &self.mats[letter - 1]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn into_matrices(self) -> Vec<CMatrix> {
        self.mats
    }

    pub fn scaled(&self, r: f64) -> MatrixTuple {
        MatrixTuple { dim: self.dim, mats: self.mats.iter().map(|a| a.scale(r)).collect() }
    }

    /// `Σ_i X_i^* X_i`.
    pub fn column_gram(&self) -> CMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for a in &self.mats {
            acc += a.adjoint() * a;
        }
        acc
    }

    /// `Σ_i X_i X_i^*`.
    pub fn row_gram(&self) -> CMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for a in &self.mats {
            acc += a * a.adjoint();
        }
        acc
    }
}

/// `X^w = X_{w_1} ⋯ X_{w_t}`; the empty word gives the identity.
pub fn word_eval(x: &MatrixTuple, w: &Word) -> Result<CMatrix> {
    w.check_alphabet(x.alphabet())?;
    let mut acc = linalg::identity(x.dim());
    for l in w.letters() {
        acc *= x.matrix(l);
    }
    Ok(acc)
}

fn check_same_alphabet(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::AlphabetMismatch { expected, found });
    }
    Ok(())
}

/// `f(rX) = Σ_w f_w r^{|w|} X^w` for a polynomial `f`.
pub fn series_eval(f: &NcSeries, x: &MatrixTuple, r: f64) -> Result<CMatrix> {
    check_same_alphabet(f.alphabet(), x.alphabet())?;
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("scale must be nonnegative, got {r}")));
    }
    let mut acc = CMatrix::zeros(x.dim(), x.dim());
    for (w, &c) in f.terms() {
        let scale = c * r.powi(w.len() as i32);
        acc += word_eval(x, w)?.map(|z| z * scale);
    }
    Ok(acc)
}

/// Partial sum of a series together with a bound on the discarded tail.
#[derive(Clone, Debug)]
pub struct TailBoundedEval {
    pub value: CMatrix,
    pub tail_bound: f64,
    /// Largest eigenvalue of `p Σ X_i^* X_i`.
    pub theta: f64,
    pub degree: usize,
}

/// Largest eigenvalue of `p Σ X_i^* X_i`.
pub fn spectral_theta(x: &MatrixTuple, p: f64) -> f64 {
    linalg::hermitian_max_eigenvalue(&x.column_gram()).max(0.0) * p
}

/// Geometric tail bound `‖f‖_{2,p} θ^{(L+1)/2} / (1 - θ^{1/2})`.
pub fn series_tail_bound(norm: f64, theta: f64, degree: usize) -> f64 {
    if norm == 0.0 {
        return 0.0;
    }
    let s = theta.sqrt();
    norm * theta.powf((degree as f64 + 1.0) / 2.0) / (1.0 - s)
}

/// Evaluates the degree-`≤ L` partial sum of a possibly infinite series at
/// `X` and bounds the operator norm of the remainder.
///
/// Requires `p Σ X_i^* X_i ≤ θ I` with `θ < 1`. Each homogeneous stratum then
/// satisfies `‖f^[l](X)‖ ≤ ‖f^[l]‖_{2,p} θ^{l/2}`, which sums to the bound.
pub fn series_eval_tail_bounded<S: CoefficientSource + ?Sized>(
    f: &S,
    x: &MatrixTuple,
    p: f64,
    degree: usize,
) -> Result<TailBoundedEval> {
    check_same_alphabet(f.alphabet(), x.alphabet())?;
    if !(p > 0.0) {
        return Err(Error::Domain(format!("weight p must be positive, got {p}")));
    }
    let theta = spectral_theta(x, p);
    if !(theta < 1.0) {
        return Err(Error::InconclusiveTail { theta });
    }
    let n = x.dim();
    let m = x.alphabet();
    let mut value = CMatrix::zeros(n, n);
    // depth-first over the word tree, carrying X^w
    let mut stack: Vec<(Word, CMatrix)> = vec![(Word::empty(), linalg::identity(n))];
    while let Some((w, xw)) = stack.pop() {
        let c = f.coefficient(&w);
        if c != ZERO {
            value += xw.map(|z| z * c);
        }
        if w.len() < degree {
            for k in (1..=m).rev() {
                let mut next = w.clone();
                next.push(k);
                stack.push((next, &xw * x.matrix(k)));
            }
        }
    }
    let tail_bound = series_tail_bound(f.l2p_norm(p), theta, degree);
    Ok(TailBoundedEval { value, tail_bound, theta, degree })
}

/// `‖f‖_{2,p} = ( Σ_l p^{-l} Σ_{|w|=l} |f_w|² )^{1/2}`.
pub fn l2p_norm(f: &NcSeries, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("weight p must be positive, got {p}")));
    }
    let sum: f64 = f
        .terms()
        .map(|(w, c)| c.norm_sqr() * p.powi(-(w.len() as i32)))
        .sum();
    Ok(sum.sqrt())
}

/// Componentwise block-diagonal sum `X ⊕ Y`.
pub fn direct_sum(x: &MatrixTuple, y: &MatrixTuple) -> Result<MatrixTuple> {
    check_same_alphabet(x.alphabet(), y.alphabet())?;
    let mats = x
        .matrices()
        .iter()
        .zip(y.matrices())
        .map(|(a, b)| linalg::block_diag(a, b))
        .collect();
    Ok(MatrixTuple { dim: x.dim() + y.dim(), mats })
}

/// `(T X_1 T^{-1}, …, T X_m T^{-1})` together with the condition number of `T`.
pub fn similarity(x: &MatrixTuple, t: &CMatrix) -> Result<(MatrixTuple, f64)> {
    if t.nrows() != x.dim() || t.ncols() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: t.nrows() });
    }
    let condition = linalg::condition_number(t);
    if !(condition * f64::EPSILON < 1.0) {
        return Err(Error::Singular { condition });
    }
    let t_inv = t.clone().try_inverse().ok_or(Error::Singular { condition })?;
    let mats = x.matrices().iter().map(|a| t * a * &t_inv).collect();
    Ok((MatrixTuple { dim: x.dim(), mats }, condition))
}
