//! Quantum state types and fidelity.
//!
//! [`DensityMatrix`] is a validated Hermitian, positive-semidefinite,
//! unit-trace complex matrix; [`PureState`] a validated unit-norm complex
//! vector. [`fidelity`] implements the squared-Uhlmann convention
//! `F(ρ,σ) = (Tr √(√ρ σ √ρ))²`, and [`fidelity_distance`] is `1 − F`.

use crate::linalg::{
    cr, ensure_finite, ensure_hermitian, ensure_square, hermitian_eig, hermitize, matrix_sqrt_psd,
    trace, CMatrix, CVector, LinalgError,
};
use crate::tol::Tolerances;
use thiserror::Error;

/// Errors from state validation.
#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("trace is {trace:.12} (deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    InvalidTrace {
        trace: f64,
        deviation: f64,
        tolerance: f64,
    },
    #[error("norm is {norm:.12} (deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    InvalidNorm {
        norm: f64,
        deviation: f64,
        tolerance: f64,
    },
    #[error("dimension mismatch: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("state dimension must be at least 1")]
    EmptyState,
}

/// A validated density matrix: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a matrix as a density matrix.
    ///
    /// Checks, in order: squareness and finiteness, Hermiticity within
    /// `tol.hermitian`, PSD within `tol.psd` (via full eigendecomposition),
    /// and `|Tr ρ − 1| ≤ tol.trace`.
    pub fn new(mat: CMatrix, tol: &Tolerances) -> Result<Self, StateError> {
        let n = ensure_square(&mat)?;
        if n == 0 {
            return Err(StateError::EmptyState);
        }
        ensure_finite(&mat)?;
        ensure_hermitian(&mat, tol)?;
        let (values, _) = hermitian_eig(&mat, tol)?;
        let min = *values.last().expect("non-empty spectrum");
        if min < -tol.psd {
            return Err(StateError::Linalg(LinalgError::NotPsd {
                min_eigenvalue: min,
            }));
        }
        let tr = trace(&mat);
        let deviation = (tr.re - 1.0).abs().max(tr.im.abs());
        if deviation > tol.trace {
            return Err(StateError::InvalidTrace {
                trace: tr.re,
                deviation,
                tolerance: tol.trace,
            });
        }
        Ok(DensityMatrix { mat })
    }

    /// Validate with the standard tolerances.
    pub fn try_from_matrix(mat: CMatrix) -> Result<Self, StateError> {
        Self::new(mat, &Tolerances::default())
    }

    /// Project an approximately valid matrix onto the closest density matrix:
    /// hermitize, clamp negative eigenvalues to zero, renormalize the trace.
    ///
    /// Used to clean up solver outputs before re-validating them. Fails only
    /// if the input is non-square/non-finite or has zero trace after
    /// clamping.
    pub fn sanitize(mat: &CMatrix, tol: &Tolerances) -> Result<Self, StateError> {
        let n = ensure_square(mat)?;
        if n == 0 {
            return Err(StateError::EmptyState);
        }
        ensure_finite(mat)?;
        let h = hermitize(mat);
        // Eigendecompose with a relaxed Hermiticity gate (h is exactly
        // Hermitian by construction, so this cannot fail that check).
        let (values, vectors) = hermitian_eig(&h, tol)?;
        let clamped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        if total <= 0.0 {
            return Err(StateError::InvalidTrace {
                trace: total,
                deviation: (total - 1.0).abs(),
                tolerance: tol.trace,
            });
        }
        let lambda = CMatrix::from_diagonal(&CVector::from_iterator(
            n,
            clamped.iter().map(|&v| cr(v / total)),
        ));
        let mat = hermitize(&(&vectors * lambda * vectors.adjoint()));
        Self::new(mat, tol)
    }

    /// Dimension `N` of the underlying Hilbert space.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Borrow the underlying matrix.
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Consume into the underlying matrix.
    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// The maximally mixed state `I/N`.
    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix {
            mat: CMatrix::identity(n, n) * cr(1.0 / n as f64),
        }
    }

    /// The computational basis state `|k⟩⟨k|`.
    pub fn basis_state(n: usize, k: usize) -> Self {
        assert!(k < n, "basis index out of range");
        let mut mat = CMatrix::zeros(n, n);
        mat[(k, k)] = cr(1.0);
        DensityMatrix { mat }
    }
}

/// A validated pure state: unit-norm complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vec: CVector,
}

impl PureState {
    /// Validate and wrap a vector as a pure state (`|‖ψ‖ − 1| ≤
    /// tol.unit_norm`, finite entries, nonzero length).
    pub fn new(vec: CVector, tol: &Tolerances) -> Result<Self, StateError> {
        if vec.is_empty() {
            return Err(StateError::EmptyState);
        }
        for (i, z) in vec.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(StateError::Linalg(LinalgError::NonFinite { row: i, col: 0 }));
            }
        }
        let norm = vec.norm();
        let deviation = (norm - 1.0).abs();
        if deviation > tol.unit_norm {
            return Err(StateError::InvalidNorm {
                norm,
                deviation,
                tolerance: tol.unit_norm,
            });
        }
        Ok(PureState { vec })
    }

    /// Validate with the standard tolerances.
    pub fn try_from_vector(vec: CVector) -> Result<Self, StateError> {
        Self::new(vec, &Tolerances::default())
    }

    /// Normalize an arbitrary nonzero vector into a pure state.
    pub fn normalized(vec: CVector, tol: &Tolerances) -> Result<Self, StateError> {
        let norm = vec.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StateError::InvalidNorm {
                norm,
                deviation: 1.0,
                tolerance: tol.unit_norm,
            });
        }
        Self::new(vec / cr(norm), tol)
    }

    /// The computational basis state `|k⟩`.
    pub fn basis(n: usize, k: usize) -> Self {
        assert!(k < n, "basis index out of range");
        let mut vec = CVector::zeros(n);
        vec[k] = cr(1.0);
        PureState { vec }
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    /// Borrow the underlying vector.
    pub fn vector(&self) -> &CVector {
        &self.vec
    }

    /// Outer product `|ψ⟩⟨ψ|` as a density matrix.
    pub fn to_density(&self) -> DensityMatrix {
        let mat = &self.vec * self.vec.adjoint();
        DensityMatrix {
            mat: hermitize(&mat),
        }
    }
}

/// Uhlmann fidelity in the **squared** convention:
/// `F(ρ,σ) = (Tr √(√ρ σ √ρ))²`, clamped into `[0, 1]`.
///
/// Symmetric in its arguments; `F(ρ,ρ) = 1`; for orthogonal pure states `0`.
///
/// Evaluated as the squared trace norm `(Σ_k s_k(√σ √ρ))²`, which equals the
/// defining expression (the eigenvalues of `√ρ σ √ρ` are the squared
/// singular values of `√σ √ρ`) but avoids taking square roots of
/// eigenvalues contaminated by `O(ε_machine)` noise, keeping the result
/// accurate near rank-deficient states.
pub fn fidelity(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    tol: &Tolerances,
) -> Result<f64, StateError> {
    if rho.dim() != sigma.dim() {
        return Err(StateError::DimensionMismatch {
            a: rho.dim(),
            b: sigma.dim(),
        });
    }
    let sqrt_rho = matrix_sqrt_psd(rho.matrix(), tol)?;
    let sqrt_sigma = matrix_sqrt_psd(sigma.matrix(), tol)?;
    let product = sqrt_sigma * sqrt_rho;
    let svd = product.svd(false, false);
    let root_sum: f64 = svd.singular_values.iter().sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Fidelity distance `D_F(ρ,σ) = 1 − F(ρ,σ)`, in `[0, 1]`.
pub fn fidelity_distance(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    tol: &Tolerances,
) -> Result<f64, StateError> {
    Ok(1.0 - fidelity(rho, sigma, tol)?)
}
