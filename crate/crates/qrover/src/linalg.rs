//! Complex Hermitian linear algebra primitives.
//!
//! Dense `f64`-complex matrices (via nalgebra) with the validated operations
//! the rest of the crate builds on: Hermiticity/PSD checks, eigendecomposition
//! of Hermitian matrices with a reconstruction self-check, and the PSD matrix
//! square root.

use crate::tol::Tolerances;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex (column) vector.
pub type CVector = DVector<Complex64>;

/// Errors from linear-algebra primitives.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix has a non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian: max |M - M†| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error(
        "eigendecomposition failed reconstruction: error {error:.3e} exceeds {tolerance:.3e}"
    )]
    Reconstruction { error: f64, tolerance: f64 },
}

/// Complex zero.
pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Complex one.
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
/// Complex imaginary unit.
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

/// Real scalar promoted to a complex entry.
pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Complex entry from real and imaginary parts.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `n × n` complex identity.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Conjugate transpose.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Trace of a square matrix.
pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Entrywise max absolute value.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entrywise max absolute difference between two matrices of equal shape.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Check that every entry is finite.
pub fn ensure_finite(m: &CMatrix) -> Result<(), LinalgError> {
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let z = m[(row, col)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(LinalgError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

/// Check that the matrix is square, returning its dimension.
pub fn ensure_square(m: &CMatrix) -> Result<usize, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Max entrywise deviation from Hermiticity, `max |M − M†|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            dev = dev.max(d);
        }
    }
    dev
}

/// Validate Hermiticity within `tol.hermitian`.
pub fn ensure_hermitian(m: &CMatrix, tol: &Tolerances) -> Result<(), LinalgError> {
    ensure_square(m)?;
    let deviation = hermitian_deviation(m);
    if deviation > tol.hermitian {
        return Err(LinalgError::NotHermitian {
            deviation,
            tolerance: tol.hermitian,
        });
    }
    Ok(())
}

/// Exactly Hermitian projection `(M + M†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * cr(0.5)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with real eigenvalues sorted in
/// descending order and the `k`-th column of the eigenvector matrix holding
/// the unit eigenvector for the `k`-th eigenvalue.
///
/// The input is validated as Hermitian within `tol.hermitian`, decomposed on
/// its exactly-hermitized form, and the result is self-checked by
/// reconstruction: `max |V Λ V† − M| ≤ tol.reconstruction`.
pub fn hermitian_eig(m: &CMatrix, tol: &Tolerances) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    ensure_finite(m)?;
    ensure_hermitian(m, tol)?;
    let h = hermitize(m);
    let eig = h.clone().symmetric_eigen();
    // Sort eigenpairs by descending eigenvalue.
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    // Reconstruction self-check.
    let lambda = CMatrix::from_diagonal(&CVector::from_iterator(n, values.iter().map(|&v| cr(v))));
    let recon = &vectors * lambda * vectors.adjoint();
    let error = max_abs_diff(&recon, &h);
    if error > tol.reconstruction {
        return Err(LinalgError::Reconstruction {
            error,
            tolerance: tol.reconstruction,
        });
    }
    Ok((values, vectors))
}

/// Minimum eigenvalue of a Hermitian matrix (convenience for PSD checks).
pub fn min_eigenvalue(m: &CMatrix, tol: &Tolerances) -> Result<f64, LinalgError> {
    let (values, _) = hermitian_eig(m, tol)?;
    Ok(*values.last().expect("non-empty spectrum"))
}

/// Validate positive semidefiniteness: all eigenvalues `≥ −tol.psd`.
pub fn ensure_psd(m: &CMatrix, tol: &Tolerances) -> Result<(), LinalgError> {
    let min = min_eigenvalue(m, tol)?;
    if min < -tol.psd {
        return Err(LinalgError::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// Principal square root of a PSD Hermitian matrix.
///
/// Eigenvalues within `[−tol.psd, 0)` are clamped to zero; an eigenvalue
/// below `−tol.psd` is an error. The result is exactly Hermitian.
pub fn matrix_sqrt_psd(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix, LinalgError> {
    let (values, vectors) = hermitian_eig(m, tol)?;
    let min = *values.last().expect("non-empty spectrum");
    if min < -tol.psd {
        return Err(LinalgError::NotPsd {
            min_eigenvalue: min,
        });
    }
    let n = m.nrows();
    let sqrt_lambda = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        values.iter().map(|&v| cr(v.max(0.0).sqrt())),
    ));
    let root = &vectors * sqrt_lambda * vectors.adjoint();
    Ok(hermitize(&root))
}

/// Apply a function to the columns-stacked vectorization of `m`
/// (column-major `vec`): returns the `n²`-vector stacking columns of `m`.
pub fn vec_col_major(m: &CMatrix) -> CVector {
    let (rows, cols) = m.shape();
    CVector::from_iterator(
        rows * cols,
        (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).map(|(i, j)| m[(i, j)]),
    )
}

/// Inverse of [`vec_col_major`] for an `n² `-vector into an `n × n` matrix.
pub fn unvec_col_major(v: &CVector, n: usize) -> CMatrix {
    debug_assert_eq!(v.len(), n * n);
    CMatrix::from_fn(n, n, |i, j| v[j * n + i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn identity_eig_is_all_ones() {
        let m = identity(3);
        let (values, vectors) = hermitian_eig(&m, &tol()).unwrap();
        for v in &values {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
        let recon = &vectors * vectors.adjoint();
        assert!(max_abs_diff(&recon, &identity(3)) < 1e-12);
    }

    #[test]
    fn pauli_z_eigenvalues_sorted_descending() {
        let z = CMatrix::from_row_slice(2, 2, &[cr(1.0), C_ZERO, C_ZERO, cr(-1.0)]);
        let (values, _) = hermitian_eig(&z, &tol()).unwrap();
        assert_abs_diff_eq!(values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(values[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn complex_hermitian_eig_reconstructs() {
        // Pauli Y has genuinely complex entries.
        let y = CMatrix::from_row_slice(2, 2, &[C_ZERO, c(0.0, -1.0), c(0.0, 1.0), C_ZERO]);
        let (values, vectors) = hermitian_eig(&y, &tol()).unwrap();
        assert_abs_diff_eq!(values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(values[1], -1.0, epsilon = 1e-12);
        let lambda = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.0), cr(-1.0)]));
        let recon = &vectors * lambda * vectors.adjoint();
        assert!(max_abs_diff(&recon, &y) < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.5), cr(0.0), cr(1.0)]);
        match hermitian_eig(&m, &tol()) {
            Err(LinalgError::NotHermitian { .. }) => {}
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(f64::NAN), C_ZERO, C_ZERO, cr(1.0)]);
        assert!(matches!(
            hermitian_eig(&m, &tol()),
            Err(LinalgError::NonFinite { .. })
        ));
    }

    #[test]
    fn sqrt_of_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(4.0), cr(9.0)]));
        let s = matrix_sqrt_psd(&m, &tol()).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(2.0), cr(3.0)]));
        assert!(max_abs_diff(&s, &expected) < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        // A random-ish PSD matrix: A A† for fixed A.
        let a = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.3, 0.1),
                c(-0.2, 0.4),
                c(0.5, 0.0),
                c(0.1, -0.3),
                c(0.7, 0.2),
                c(0.0, 0.1),
                c(0.2, 0.2),
                c(-0.1, 0.0),
                c(0.4, -0.5),
            ],
        );
        let psd = &a * a.adjoint();
        let s = matrix_sqrt_psd(&psd, &tol()).unwrap();
        assert!(max_abs_diff(&(&s * &s), &psd) < 1e-10);
        assert!(hermitian_deviation(&s) < 1e-14);
    }

    #[test]
    fn sqrt_clamps_tiny_negative_eigenvalue() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.0), cr(-1e-10)]));
        let s = matrix_sqrt_psd(&m, &tol()).unwrap();
        assert_abs_diff_eq!(s[(1, 1)].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_rejects_real_negative_eigenvalue() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.0), cr(-0.5)]));
        assert!(matches!(
            matrix_sqrt_psd(&m, &tol()),
            Err(LinalgError::NotPsd { .. })
        ));
    }

    #[test]
    fn vec_unvec_roundtrip_column_major() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(3.0, -1.0), c(4.0, 0.5)]);
        let v = vec_col_major(&m);
        // Column-major: [m00, m10, m01, m11].
        assert_eq!(v[0], c(1.0, 0.0));
        assert_eq!(v[1], c(3.0, -1.0));
        assert_eq!(v[2], c(2.0, 1.0));
        assert_eq!(v[3], c(4.0, 0.5));
        let back = unvec_col_major(&v, 2);
        assert_eq!(back, m);
    }

    #[test]
    fn kron_shapes_and_values() {
        let x = CMatrix::from_row_slice(2, 2, &[C_ZERO, C_ONE, C_ONE, C_ZERO]);
        let i = identity(2);
        let xi = kron(&x, &i);
        assert_eq!(xi.shape(), (4, 4));
        // (X ⊗ I)[0,2] = X[0,1] I[0,0] = 1.
        assert_eq!(xi[(0, 2)], C_ONE);
        assert_eq!(xi[(0, 1)], C_ZERO);
    }
}
