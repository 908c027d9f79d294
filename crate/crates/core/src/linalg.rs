//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Hermitian part `(A + A*) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and unitary
/// eigenvectors (columns).
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitian_part(a);
    let eig = h.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `f(A)` for Hermitian `A` via its spectral decomposition.
pub fn hermitian_apply(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(a);
    let n = vals.len();
    let mut d = CMatrix::zeros(n, n);
    for (i, v) in vals.iter().enumerate() {
        d[(i, i)] = Complex64::new(f(*v), 0.0);
    }
    &vecs * d * vecs.adjoint()
}

/// PSD square root (negative eigenvalues from rounding are clamped to 0).
pub fn psd_sqrt(a: &CMatrix) -> CMatrix {
    hermitian_apply(a, |x| x.max(0.0).sqrt())
}

/// Largest singular value.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let g = a.adjoint() * a;
    let (vals, _) = hermitian_eigen(&g);
    vals.into_iter().fold(0.0, f64::max).max(0.0).sqrt()
}

/// Euclidean norm of a complex vector.
pub fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian dot `a . b = sum a_i conj(b_i)`.
pub fn vdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn matvec(a: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..a.nrows()).map(|r| (0..a.ncols()).map(|c| a[(r, c)] * v[c]).sum()).collect()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.5), Complex64::new(0.5, -0.5), Complex64::new(1.0, 0.0)],
        );
        let s = psd_sqrt(&a);
        assert!(frobenius(&(&s * &s - &a)) < 1e-12);
    }

    #[test]
    fn op_norm_of_diagonal() {
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 0)] = Complex64::new(0.0, -2.0);
        a[(1, 1)] = Complex64::new(5.0, 0.0);
        assert!((op_norm(&a) - 5.0).abs() < 1e-12);
    }
}
