//! The three robustness quantities and their sandwich assembly.
//!
//! * `ε_RLB` — a certified lower bound computed from the outcome
//!   distribution alone: `min_{c≠c*} ½(√p_{c*} − √p_c)²`.
//! * `ε*` — the exact robustness radius: the minimum fidelity distance
//!   from `ρ` to any state the classifier assigns a different (or tied)
//!   class, found by one SDP per wrong class.
//! * `ε_RUB` — an attack-derived upper bound (produced by the attack
//!   module, assembled here).
//!
//! Together they satisfy `ε_RLB ≤ ε* ≤ ε_RUB`; a violation beyond 1e-6
//! signals an implementation bug, surfaced as [`BoundsError::SandwichViolation`].

use crate::classifier::{argmax_tie_smallest, Classifier, ClassifierError};
use crate::exec::{map_items, Jobs};
use crate::linalg::{hermitize, LinalgError};
use crate::sdp::{certainly_infeasible, sanitize_witness, solve_min_distance, SdpConfig, SdpOutcome};
use crate::state::{DensityMatrix, StateError};
use crate::tol::Tolerances;
use thiserror::Error;

/// Errors from bound computation and assembly.
#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("need at least two classes, got {n}")]
    TooFewClasses { n: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("SDP solver failure: {status}")]
    SolverFailure { status: String },
    #[error("sandwich violation: {0}")]
    SandwichViolation(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A robustness radius: finite, or infinite when no misclassified state
/// exists at any distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius {
    Finite(f64),
    Infinite,
}

impl Radius {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Radius::Infinite)
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            Radius::Finite(v) => Some(*v),
            Radius::Infinite => None,
        }
    }

    /// True when this radius strictly exceeds the perturbation budget
    /// (an infinite radius exceeds every budget).
    pub fn exceeds(&self, eps: f64) -> bool {
        match self {
            Radius::Finite(v) => *v > eps,
            Radius::Infinite => true,
        }
    }
}

impl std::fmt::Display for Radius {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Radius::Finite(v) => write!(f, "{v}"),
            Radius::Infinite => write!(f, "inf"),
        }
    }
}

/// Result of the exact-radius computation.
#[derive(Debug, Clone)]
pub struct OptimalRadius {
    pub radius: Radius,
    /// The optimizing adversarial state, absent when the radius is infinite.
    pub witness: Option<DensityMatrix>,
    /// Label index achieving the minimum, absent when infinite.
    pub target_label: Option<usize>,
}

/// Certified robustness lower bound from an outcome distribution:
/// with `c* = argmax` (ties to the smallest index),
/// `ε_RLB = min_{c≠c*} ½(√p_{c*} − √p_c)²`.
pub fn robustness_lower_bound(dist: &[f64]) -> Result<f64, BoundsError> {
    if dist.len() < 2 {
        return Err(BoundsError::TooFewClasses { n: dist.len() });
    }
    let sum: f64 = dist.iter().sum();
    if dist.iter().any(|&p| !p.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&p)) {
        return Err(BoundsError::InvalidDistribution(format!(
            "entries outside [0,1]: {dist:?}"
        )));
    }
    if (sum - 1.0).abs() > 1e-8 {
        return Err(BoundsError::InvalidDistribution(format!(
            "sum {sum} deviates from 1"
        )));
    }
    let star = argmax_tie_smallest(dist);
    let sqrt_star = dist[star].max(0.0).sqrt();
    let mut best = f64::INFINITY;
    for (c, &p) in dist.iter().enumerate() {
        if c == star {
            continue;
        }
        let d = sqrt_star - p.max(0.0).sqrt();
        best = best.min(0.5 * d * d);
    }
    Ok(best)
}

/// Exact robustness radius `ε*` by one distance SDP per wrong class,
/// minimized over classes. Per-class solves are independent and run under
/// the given [`Jobs`] policy; the reduction order is fixed, so results are
/// identical for any parallelism setting.
pub fn optimal_radius(
    a: &Classifier,
    rho: &DensityMatrix,
    cfg: &SdpConfig,
    jobs: Jobs,
    tol: &Tolerances,
) -> Result<OptimalRadius, BoundsError> {
    let star = a.classify(rho, tol)?;
    let effects = a.heisenberg_povm();
    let targets: Vec<usize> = (0..a.n_classes()).filter(|&c| c != star).collect();
    if targets.is_empty() {
        return Err(BoundsError::TooFewClasses { n: a.n_classes() });
    }
    let outcomes: Vec<Result<SdpOutcome, BoundsError>> = map_items(jobs, &targets, |_, &c| {
        let a_c = hermitize(&(&effects[star] - &effects[c]));
        if certainly_infeasible(&a_c, tol) {
            return Ok(SdpOutcome::Infeasible);
        }
        solve_min_distance(rho.matrix(), &a_c, cfg)
            .map_err(|f| BoundsError::SolverFailure { status: f.status })
    });

    let mut best: Option<(f64, usize, DensityMatrix)> = None;
    for (&c, outcome) in targets.iter().zip(outcomes.into_iter()) {
        match outcome? {
            SdpOutcome::Infeasible => {}
            SdpOutcome::Optimal {
                sqrt_fidelity,
                sigma,
            } => {
                let eps_c = (1.0 - sqrt_fidelity * sqrt_fidelity).max(0.0);
                let better = match &best {
                    None => true,
                    Some((cur, _, _)) => eps_c < *cur,
                };
                if better {
                    if let Some(witness) = sanitize_witness(sigma, tol) {
                        best = Some((eps_c, c, witness));
                    }
                }
            }
        }
    }
    Ok(match best {
        Some((eps, c, witness)) => OptimalRadius {
            radius: Radius::Finite(eps),
            witness: Some(witness),
            target_label: Some(c),
        },
        None => OptimalRadius {
            radius: Radius::Infinite,
            witness: None,
            target_label: None,
        },
    })
}

/// The assembled bounds for one state.
#[derive(Debug, Clone)]
pub struct RobustnessBounds {
    /// Certified lower bound `ε_RLB`.
    pub rlb: f64,
    /// Exact radius `ε*` (absent when the SDP was not run).
    pub optimal: Option<Radius>,
    /// Attack upper bound `ε_RUB` (absent when no attack ran or succeeded).
    pub rub: Option<f64>,
    /// Adversarial witness (SDP optimizer or attack output).
    pub witness: Option<DensityMatrix>,
    /// Label achieving the minimum in the exact radius.
    pub target_label: Option<usize>,
}

impl RobustnessBounds {
    /// Estimation gap `Δ = ε_RUB − ε_RLB`, defined when both are present.
    pub fn gap(&self) -> Option<f64> {
        self.rub.map(|rub| rub - self.rlb)
    }
}

/// Assemble bounds from their producers, checking the sandwich invariant
/// `ε_RLB ≤ ε* ≤ ε_RUB` within `tol.sandwich` on every available pair.
pub fn assemble_bounds(
    rlb: f64,
    optimal: Option<Radius>,
    rub: Option<f64>,
    witness: Option<DensityMatrix>,
    target_label: Option<usize>,
    tol: &Tolerances,
) -> Result<RobustnessBounds, BoundsError> {
    let slack = tol.sandwich;
    if let Some(radius) = &optimal {
        match radius {
            Radius::Finite(opt) => {
                if rlb > opt + slack {
                    return Err(BoundsError::SandwichViolation(format!(
                        "ε_RLB = {rlb} exceeds ε* = {opt}"
                    )));
                }
                if let Some(rub) = rub {
                    if *opt > rub + slack {
                        return Err(BoundsError::SandwichViolation(format!(
                            "ε* = {opt} exceeds ε_RUB = {rub}"
                        )));
                    }
                }
            }
            Radius::Infinite => {
                if let Some(rub) = rub {
                    return Err(BoundsError::SandwichViolation(format!(
                        "infinite ε* with a successful attack at ε_RUB = {rub}"
                    )));
                }
            }
        }
    }
    if let Some(rub) = rub {
        if rlb > rub + slack {
            return Err(BoundsError::SandwichViolation(format!(
                "ε_RLB = {rlb} exceeds ε_RUB = {rub}"
            )));
        }
    }
    Ok(RobustnessBounds {
        rlb,
        optimal,
        rub,
        witness,
        target_label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitIR;
    use crate::classifier::Povm;
    use crate::linalg::{cr, identity, CMatrix, C_ZERO};
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn identity_classifier() -> Classifier {
        Classifier::from_circuit(&CircuitIR::empty(1), None, Povm::z_basis(), &tol()).unwrap()
    }

    #[test]
    fn rlb_closed_forms() {
        assert_abs_diff_eq!(robustness_lower_bound(&[1.0, 0.0]).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(robustness_lower_bound(&[0.5, 0.5]).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(robustness_lower_bound(&[0.9, 0.1]).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn rlb_rejects_bad_input() {
        assert!(matches!(
            robustness_lower_bound(&[1.0]),
            Err(BoundsError::TooFewClasses { n: 1 })
        ));
        assert!(matches!(
            robustness_lower_bound(&[0.9, 0.3]),
            Err(BoundsError::InvalidDistribution(_))
        ));
    }

    #[test]
    fn rlb_monotone_in_winner_confidence() {
        // Fixed loser mass 0.1, remainder in a third class; the winner's
        // confidence grows and ε_RLB must not decrease.
        let mut last = -1.0;
        for k in 0..10 {
            let p_star = 0.5 + 0.04 * k as f64;
            let rest = 1.0 - p_star - 0.1;
            let rlb = robustness_lower_bound(&[p_star, 0.1, rest]).unwrap();
            assert!(rlb >= last - 1e-12);
            last = rlb;
        }
    }

    #[test]
    fn optimal_radius_pure_zero_state() {
        let a = identity_classifier();
        let rho = DensityMatrix::basis_state(2, 0);
        let out = optimal_radius(&a, &rho, &SdpConfig::default(), Jobs::Sequential, &tol()).unwrap();
        let eps = out.radius.finite().expect("finite radius");
        assert_abs_diff_eq!(eps, 0.5, epsilon = 1e-6);
        let witness = out.witness.expect("witness");
        assert_abs_diff_eq!(witness.matrix()[(0, 0)].re, 0.5, epsilon = 1e-4);
        assert_eq!(out.target_label, Some(1));
    }

    #[test]
    fn optimal_radius_mixed_diagonal_state() {
        let a = identity_classifier();
        let rho = DensityMatrix::try_from_matrix(CMatrix::from_row_slice(
            2,
            2,
            &[cr(0.9), C_ZERO, C_ZERO, cr(0.1)],
        ))
        .unwrap();
        let out = optimal_radius(&a, &rho, &SdpConfig::default(), Jobs::Sequential, &tol()).unwrap();
        let eps = out.radius.finite().expect("finite radius");
        assert_abs_diff_eq!(eps, 0.2, epsilon = 1e-6);
    }

    #[test]
    fn optimal_radius_infinite_for_unreachable_class() {
        // POVM {I, 0}: class 1 has zero probability everywhere.
        let povm = Povm::new(
            vec!["0".into(), "1".into()],
            vec![identity(2), CMatrix::zeros(2, 2)],
            &tol(),
        )
        .unwrap();
        let a = Classifier::from_circuit(&CircuitIR::empty(1), None, povm, &tol()).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let out = optimal_radius(&a, &rho, &SdpConfig::default(), Jobs::Sequential, &tol()).unwrap();
        assert!(out.radius.is_infinite());
        assert!(out.witness.is_none());
        assert!(out.target_label.is_none());
    }

    #[test]
    fn sandwich_on_closed_form_instances() {
        let a = identity_classifier();
        for rho in [
            DensityMatrix::basis_state(2, 0),
            DensityMatrix::try_from_matrix(CMatrix::from_row_slice(
                2,
                2,
                &[cr(0.9), C_ZERO, C_ZERO, cr(0.1)],
            ))
            .unwrap(),
        ] {
            let dist = a.outcome_distribution(&rho, &tol()).unwrap();
            let rlb = robustness_lower_bound(&dist).unwrap();
            let out =
                optimal_radius(&a, &rho, &SdpConfig::default(), Jobs::Sequential, &tol()).unwrap();
            let eps = out.radius.finite().unwrap();
            assert!(rlb <= eps + 1e-6, "rlb {rlb} > eps {eps}");
        }
    }

    #[test]
    fn assemble_checks_sandwich() {
        let ok = assemble_bounds(0.5, Some(Radius::Finite(0.5)), None, None, None, &tol()).unwrap();
        assert!(ok.gap().is_none());
        let with_gap =
            assemble_bounds(0.2, Some(Radius::Finite(0.2)), Some(0.25), None, None, &tol())
                .unwrap();
        assert_abs_diff_eq!(with_gap.gap().unwrap(), 0.05, epsilon = 1e-12);
        assert!(matches!(
            assemble_bounds(0.3, Some(Radius::Finite(0.2)), None, None, None, &tol()),
            Err(BoundsError::SandwichViolation(_))
        ));
        assert!(matches!(
            assemble_bounds(0.1, Some(Radius::Infinite), Some(0.4), None, None, &tol()),
            Err(BoundsError::SandwichViolation(_))
        ));
    }

    #[test]
    fn radius_exceeds_budget() {
        assert!(Radius::Finite(0.3).exceeds(0.2));
        assert!(!Radius::Finite(0.2).exceeds(0.2));
        assert!(Radius::Infinite.exceeds(1e12));
    }
}
