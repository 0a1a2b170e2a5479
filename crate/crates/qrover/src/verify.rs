//! Per-state and dataset robustness verification.
//!
//! * [`verify_state`] — the per-state verifier: compute the exact radius
//!   `ε*(ρ)` and compare against the budget (`robust ⟺ ε* > ε`; equality
//!   is non-robust).
//! * [`verify_dataset`] — robust accuracy over a labeled dataset with
//!   adversarial-example harvesting. The `mixed` method pre-screens with
//!   the certified lower bound and solves SDPs only for items it cannot
//!   certify; `exact` solves every item. The certified bound never
//!   overclaims, so the pre-screen is lossless and both methods produce
//!   identical verdicts.
//! * [`under_robust_accuracy`] — the SDP-free under-approximation from
//!   lower bounds alone.
//!
//! Misclassified items are partitioned out of the robust-accuracy
//! denominator and reported separately: robustness is only defined
//! relative to a correct prediction.

use crate::attack::EncodedInput;
use crate::bounds::{optimal_radius, robustness_lower_bound, BoundsError, Radius};
use crate::classifier::{Classifier, ClassifierError};
use crate::exec::{map_items, Jobs};
use crate::sdp::SdpConfig;
use crate::state::{DensityMatrix, StateError};
use crate::tol::Tolerances;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Errors from dataset verification.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("epsilon must lie in [0, 1), got {eps}")]
    BadEpsilon { eps: f64 },
    #[error("item {index} has label `{label}` not present in the classifier")]
    UnknownLabel { index: usize, label: String },
    #[error("dataset `{name}` is empty")]
    EmptyDataset { name: String },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// One dataset entry: either a raw density matrix or an encoded feature
/// vector (whose state is attacked through its encoding).
#[derive(Debug, Clone)]
pub enum DatasetItem {
    State(DensityMatrix),
    Encoded(EncodedInput),
}

impl DatasetItem {
    /// The quantum state this item verifies against.
    pub fn state(&self) -> &DensityMatrix {
        match self {
            DatasetItem::State(rho) => rho,
            DatasetItem::Encoded(e) => e.state(),
        }
    }

    /// The encoded input, when this item carries one.
    pub fn encoded(&self) -> Option<&EncodedInput> {
        match self {
            DatasetItem::State(_) => None,
            DatasetItem::Encoded(e) => Some(e),
        }
    }
}

/// A labeled item.
#[derive(Debug, Clone)]
pub struct LabeledItem {
    pub item: DatasetItem,
    pub label: String,
}

/// A named dataset of labeled items.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub name: String,
    pub items: Vec<LabeledItem>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, items: Vec<LabeledItem>) -> Self {
        LabeledDataset {
            name: name.into(),
            items,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Dataset verification strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VerifyMethod {
    /// Lower bounds only, no SDP: items the bound cannot certify stay
    /// [`Verdict::Uncertified`] and the robust accuracy reported is the
    /// under-approximation.
    Lb,
    /// Solve the exact radius for every correctly classified item.
    Exact,
    /// Pre-screen with `ε_RLB`; solve only items with `ε > ε_RLB`.
    #[default]
    Mixed,
}

/// Per-item verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Robust,
    NonRobust,
    /// Lower-bound-only verification could not certify this item (it may
    /// or may not be robust).
    Uncertified,
    SkippedMisclassified,
}

/// Result of verifying a single state against a fixed budget.
#[derive(Debug, Clone)]
pub struct StateVerdict {
    /// `ε*(ρ) > ε`.
    pub robust: bool,
    /// The ε-adversarial example, present exactly when non-robust.
    pub witness: Option<DensityMatrix>,
    pub eps_star: Radius,
    /// Class achieving the radius, absent when infinite.
    pub target_label: Option<usize>,
    /// The witness sits on the decision boundary: argmax tie-breaking
    /// still assigns the original class.
    pub boundary: bool,
}

/// One row of the per-item report.
#[derive(Debug, Clone)]
pub struct ItemReport {
    pub index: usize,
    /// Certified lower bound (absent for misclassified items).
    pub rlb: Option<f64>,
    /// Exact radius when an SDP ran for this item.
    pub optimal: Option<Radius>,
    /// Attack upper bound (filled by attack sweeps, not by verification).
    pub rub: Option<f64>,
    pub verdict: Verdict,
    /// Position of this item's witness in the adversarial set.
    pub witness_ref: Option<usize>,
}

/// A harvested adversarial example.
#[derive(Debug, Clone)]
pub struct AdversarialExample {
    pub witness: DensityMatrix,
    pub item_index: usize,
    /// The original item's correct label, so harvested witnesses can feed
    /// adversarial retraining directly.
    pub label: String,
    /// The witness lies on the decision boundary (see [`StateVerdict::boundary`]).
    pub boundary: bool,
}

/// Wall-clock phase durations. Kept in memory for display only — never
/// serialized, so reports are byte-identical across runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub prescreen: Duration,
    pub sdp: Duration,
    pub total: Duration,
}

/// The full dataset verification result.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub epsilon: f64,
    pub method: VerifyMethod,
    pub per_item: Vec<ItemReport>,
    /// `1 − |R| / |{correctly classified}|`.
    pub robust_accuracy: f64,
    /// SDP-free under-approximation from lower bounds alone.
    pub under_robust_accuracy: Option<f64>,
    pub adversarial_set: Vec<AdversarialExample>,
    /// Indices partitioned out as misclassified.
    pub misclassified: Vec<usize>,
    /// Number of items that entered the per-state SDP verifier.
    pub sdp_calls: usize,
    pub timing: PhaseTimings,
}

fn check_epsilon(eps: f64) -> Result<(), VerifyError> {
    if !eps.is_finite() || !(0.0..1.0).contains(&eps) {
        return Err(VerifyError::BadEpsilon { eps });
    }
    Ok(())
}

/// Verify one state against the budget `eps`: robust iff `ε*(ρ) > ε`.
/// On a non-robust verdict the SDP optimizer is returned as the
/// ε-adversarial example, flagged when it sits exactly on the boundary.
pub fn verify_state(
    a: &Classifier,
    eps: f64,
    rho: &DensityMatrix,
    cfg: &SdpConfig,
    jobs: Jobs,
    tol: &Tolerances,
) -> Result<StateVerdict, VerifyError> {
    check_epsilon(eps)?;
    let original = a.classify(rho, tol)?;
    let out = optimal_radius(a, rho, cfg, jobs, tol)?;
    let robust = out.radius.exceeds(eps);
    if robust {
        Ok(StateVerdict {
            robust: true,
            witness: None,
            eps_star: out.radius,
            target_label: out.target_label,
            boundary: false,
        })
    } else {
        let witness = out.witness;
        let boundary = match &witness {
            Some(w) => a.classify(w, tol)? == original,
            None => false,
        };
        Ok(StateVerdict {
            robust: false,
            witness,
            eps_star: out.radius,
            target_label: out.target_label,
            boundary,
        })
    }
}

/// Pre-screen outcome for one item.
enum Screened {
    Misclassified,
    Correct { rlb: f64 },
}

fn prescreen(
    a: &Classifier,
    t: &LabeledDataset,
    jobs: Jobs,
    tol: &Tolerances,
) -> Result<Vec<Screened>, VerifyError> {
    for (index, item) in t.items.iter().enumerate() {
        if a.povm().label_index(&item.label).is_none() {
            return Err(VerifyError::UnknownLabel {
                index,
                label: item.label.clone(),
            });
        }
    }
    let rows: Vec<Result<Screened, VerifyError>> = map_items(jobs, &t.items, |_, entry| {
        let dist = a.outcome_distribution(entry.item.state(), tol)?;
        let predicted = crate::classifier::argmax_tie_smallest(&dist);
        let expected = a
            .povm()
            .label_index(&entry.label)
            .expect("label checked above");
        if predicted != expected {
            return Ok(Screened::Misclassified);
        }
        let rlb = robustness_lower_bound(&dist)?;
        Ok(Screened::Correct { rlb })
    });
    rows.into_iter().collect()
}

/// Verify robust accuracy over a labeled dataset.
///
/// Items are processed independently (respecting `jobs`) and reduced in
/// index order, so the report is identical for every parallelism setting.
pub fn verify_dataset(
    a: &Classifier,
    eps: f64,
    t: &LabeledDataset,
    method: VerifyMethod,
    cfg: &SdpConfig,
    jobs: Jobs,
    tol: &Tolerances,
) -> Result<VerificationReport, VerifyError> {
    check_epsilon(eps)?;
    if t.is_empty() {
        return Err(VerifyError::EmptyDataset {
            name: t.name.clone(),
        });
    }
    let started = Instant::now();
    let screened = prescreen(a, t, jobs, tol)?;
    let prescreen_time = started.elapsed();

    // Items entering the SDP stage.
    let selected: Vec<usize> = screened
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            Screened::Misclassified => None,
            Screened::Correct { rlb } => match method {
                VerifyMethod::Lb => None,
                VerifyMethod::Exact => Some(i),
                VerifyMethod::Mixed => (eps > *rlb).then_some(i),
            },
        })
        .collect();

    let sdp_started = Instant::now();
    let verdicts: Vec<Result<StateVerdict, VerifyError>> =
        map_items(jobs, &selected, |_, &i| {
            verify_state(a, eps, t.items[i].item.state(), cfg, Jobs::Sequential, tol)
        });
    let sdp_time = sdp_started.elapsed();

    let mut by_index: Vec<Option<StateVerdict>> = vec![None; t.items.len()];
    for (&i, verdict) in selected.iter().zip(verdicts.into_iter()) {
        by_index[i] = Some(verdict?);
    }

    let mut per_item = Vec::with_capacity(t.items.len());
    let mut adversarial_set = Vec::new();
    let mut misclassified = Vec::new();
    for (index, screen) in screened.iter().enumerate() {
        match screen {
            Screened::Misclassified => {
                misclassified.push(index);
                per_item.push(ItemReport {
                    index,
                    rlb: None,
                    optimal: None,
                    rub: None,
                    verdict: Verdict::SkippedMisclassified,
                    witness_ref: None,
                });
            }
            Screened::Correct { rlb } => match by_index[index].take() {
                None => {
                    // No SDP ran: either the pre-screen certified the item
                    // (mixed) or bounds are all we compute (lb).
                    let verdict = if eps <= *rlb {
                        Verdict::Robust
                    } else {
                        debug_assert_eq!(method, VerifyMethod::Lb);
                        Verdict::Uncertified
                    };
                    per_item.push(ItemReport {
                        index,
                        rlb: Some(*rlb),
                        optimal: None,
                        rub: None,
                        verdict,
                        witness_ref: None,
                    });
                }
                Some(v) => {
                    let witness_ref = if let Some(witness) = v.witness {
                        adversarial_set.push(AdversarialExample {
                            witness,
                            item_index: index,
                            label: t.items[index].label.clone(),
                            boundary: v.boundary,
                        });
                        Some(adversarial_set.len() - 1)
                    } else {
                        None
                    };
                    per_item.push(ItemReport {
                        index,
                        rlb: Some(*rlb),
                        optimal: Some(v.eps_star),
                        rub: None,
                        verdict: if v.robust {
                            Verdict::Robust
                        } else {
                            Verdict::NonRobust
                        },
                        witness_ref,
                    });
                }
            },
        }
    }

    let denominator = t.items.len() - misclassified.len();
    let non_robust = per_item
        .iter()
        .filter(|it| it.verdict == Verdict::NonRobust)
        .count();
    let under = if denominator == 0 {
        1.0
    } else {
        let uncertified = screened
            .iter()
            .filter(|s| matches!(s, Screened::Correct { rlb } if eps > *rlb))
            .count();
        1.0 - uncertified as f64 / denominator as f64
    };
    // With bounds alone nothing is ever proven non-robust, so the honest
    // headline number for `lb` is the under-approximation itself.
    let robust_accuracy = if method == VerifyMethod::Lb {
        under
    } else if denominator == 0 {
        1.0
    } else {
        1.0 - non_robust as f64 / denominator as f64
    };

    Ok(VerificationReport {
        epsilon: eps,
        method,
        per_item,
        robust_accuracy,
        under_robust_accuracy: Some(under),
        adversarial_set,
        misclassified,
        sdp_calls: selected.len(),
        timing: PhaseTimings {
            prescreen: prescreen_time,
            sdp: sdp_time,
            total: started.elapsed(),
        },
    })
}

/// SDP-free under-approximation of robust accuracy: every item whose
/// certified lower bound does not cover the budget counts as potentially
/// non-robust.
pub fn under_robust_accuracy(
    a: &Classifier,
    eps: f64,
    t: &LabeledDataset,
    jobs: Jobs,
    tol: &Tolerances,
) -> Result<f64, VerifyError> {
    check_epsilon(eps)?;
    if t.is_empty() {
        return Err(VerifyError::EmptyDataset {
            name: t.name.clone(),
        });
    }
    let screened = prescreen(a, t, jobs, tol)?;
    let correct = screened
        .iter()
        .filter(|s| matches!(s, Screened::Correct { .. }))
        .count();
    if correct == 0 {
        return Ok(1.0);
    }
    let uncertified = screened
        .iter()
        .filter(|s| matches!(s, Screened::Correct { rlb } if eps > *rlb))
        .count();
    Ok(1.0 - uncertified as f64 / correct as f64)
}
