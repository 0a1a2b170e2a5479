//! Centralized numerical tolerances.
//!
//! Every structural validation in the crate (Hermiticity, positivity, trace
//! normalization, completeness, distribution checks) reads its threshold from
//! a [`Tolerances`] record instead of a scattered literal, so call sites can
//! tighten or relax checks uniformly.

/// Numerical tolerances used by validation and cross-checks.
///
/// The defaults are the normative values used throughout the crate and its
/// test suite. All fields are absolute thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max allowed `‖M − M†‖∞` (entrywise) for a matrix to count as Hermitian.
    pub hermitian: f64,
    /// Eigenvalues of a PSD matrix may dip this far below zero (they are
    /// clamped to zero when within the band).
    pub psd: f64,
    /// Max allowed `|Tr ρ − 1|` for a density matrix.
    pub trace: f64,
    /// Max allowed `|‖ψ‖ − 1|` for a pure state.
    pub unit_norm: f64,
    /// Max allowed `‖V Λ V† − M‖∞` for an eigendecomposition to be accepted.
    pub reconstruction: f64,
    /// Max allowed `‖Σ K†K − I‖∞` for a Kraus channel to count as
    /// trace-preserving, and `‖Σ M_c − I‖∞` for POVM completeness.
    pub completeness: f64,
    /// Max allowed `|Σ_c p_c − 1|` for an outcome distribution.
    pub distribution: f64,
    /// Slack allowed when checking the bound ordering
    /// `lower ≤ optimal ≤ upper`.
    pub sandwich: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-10,
            psd: 1e-9,
            trace: 1e-10,
            unit_norm: 1e-10,
            reconstruction: 1e-8,
            completeness: 1e-8,
            distribution: 1e-8,
            sandwich: 1e-6,
        }
    }
}

impl Tolerances {
    /// The default tolerance set as a `const`-friendly constructor.
    pub fn standard() -> Self {
        Self::default()
    }
}
