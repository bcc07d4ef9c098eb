//! Small dense complex helpers on top of nalgebra.

use nalgebra::DMatrix;
pub use num_complex::Complex;

pub type Complex64 = Complex<f64>;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().copied().sum()
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of the Hermitian part `(A + A*)/2`, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> alloc::vec::Vec<f64> {
    if a.nrows() == 0 {
        return alloc::vec::Vec::new();
    }
    let h = (a + a.adjoint()).scale(0.5);
    let mut ev: alloc::vec::Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn hermitian_max_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigenvalues(a).last().copied().unwrap_or(0.0)
}

pub fn hermitian_min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigenvalues(a).first().copied().unwrap_or(0.0)
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// 2-norm condition number; infinite when the smallest singular value is zero.
pub fn condition_number(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let max = sv.iter().fold(0.0_f64, |acc, &s| acc.max(s));
    let min = sv.iter().fold(f64::INFINITY, |acc, &s| acc.min(s));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows() + b.nrows();
    let mut out = CMatrix::zeros(n, n);
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols()))
        .copy_from(b);
    out
}

/// Relative Frobenius distance `|a - b| / max(1, |b|)`.
pub fn relative_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius_norm(&(a - b)) / frobenius_norm(b).max(1.0)
}
