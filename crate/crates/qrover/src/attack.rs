//! Gradient attacks on classical feature encodings: FGSM and Mask-FGSM
//! with parameter-shift gradients, producing empirical robustness upper
//! bounds `ε_RUB = D_F(ρ(x), ρ(x'))`.

use crate::circuit::{CircuitIR, GateKind, GateOp};
use crate::classifier::{Classifier, ClassifierError};
use crate::linalg::LinalgError;
use crate::rng::SplitMix64;
use crate::sim::{simulate_pure, SimError};
use crate::state::{fidelity_distance, DensityMatrix, PureState, StateError};
use crate::tol::Tolerances;
use num_complex::Complex64;
use thiserror::Error;

/// Errors from encoding and attack execution.
#[derive(Debug, Error)]
pub enum AttackError {
    #[error("encoding gate `{gate}` is not a shiftable rotation (rx/ry/rz)")]
    NonShiftableGate { gate: String },
    #[error("invalid attack configuration: {0}")]
    BadConfig(String),
    #[error("invalid encoding: {0}")]
    BadEncoding(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
}

/// How classical features become a quantum state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Feature `i` drives an `ry(x_i)` on qubit `i mod n`, layered.
    Angle,
    /// Features are the normalized amplitudes of the state vector.
    Amplitude,
}

/// A classical feature vector together with its encoded quantum state.
#[derive(Debug, Clone)]
pub struct EncodedInput {
    features: Vec<f64>,
    encoding: Encoding,
    circuit: CircuitIR,
    state: DensityMatrix,
}

impl EncodedInput {
    /// Angle-encode `features` on `n_qubits`: feature `i` becomes an
    /// `ry(x_i)` rotation on qubit `i mod n_qubits`, applied in feature
    /// order (so later layers stack on earlier ones). Each gate binds
    /// parameter slot `i`, allowing re-encoding by rebinding.
    pub fn angle(features: &[f64], n_qubits: usize) -> Result<Self, AttackError> {
        if features.is_empty() {
            return Err(AttackError::BadEncoding("empty feature vector".into()));
        }
        if n_qubits == 0 {
            return Err(AttackError::BadEncoding("zero qubits".into()));
        }
        let mut circuit = CircuitIR::empty(n_qubits);
        for (i, &x) in features.iter().enumerate() {
            circuit.push_gate(GateOp::rotation_slot(GateKind::Ry, i % n_qubits, x, i as u32));
        }
        EncodedInput::from_circuit(circuit, features)
    }

    /// Encode `features` through an arbitrary preparation circuit whose
    /// parameter slots `0..features.len()` bind the feature vector (e.g. a
    /// fixed entangling layout with one tunable rotation per feature).
    /// Classified as `Angle` encoding: re-encoding rebinds the same circuit,
    /// and gradients shift the slotted rotations.
    pub fn from_circuit(circuit: CircuitIR, features: &[f64]) -> Result<Self, AttackError> {
        if features.is_empty() {
            return Err(AttackError::BadEncoding("empty feature vector".into()));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(AttackError::BadEncoding("non-finite feature".into()));
        }
        if circuit.slot_count() != features.len() {
            return Err(AttackError::BadEncoding(format!(
                "circuit binds {} parameter slots but {} features were given",
                circuit.slot_count(),
                features.len()
            )));
        }
        circuit.validate()?;
        let state = simulate_pure(&circuit, features)?.to_density();
        Ok(EncodedInput {
            features: features.to_vec(),
            encoding: Encoding::Angle,
            circuit,
            state,
        })
    }

    /// Amplitude-encode `features` (length a power of two ≥ 2) as a
    /// normalized state vector. The circuit field is empty — the state is
    /// prepared directly — so gradient attacks report `NonShiftableGate`.
    pub fn amplitude(features: &[f64]) -> Result<Self, AttackError> {
        let dim = features.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(AttackError::BadEncoding(format!(
                "amplitude encoding needs a power-of-two length ≥ 2, got {dim}"
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(AttackError::BadEncoding("non-finite feature".into()));
        }
        let norm: f64 = features.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(AttackError::BadEncoding(
                "amplitude encoding of the zero vector".into(),
            ));
        }
        let amps: Vec<Complex64> = features
            .iter()
            .map(|&x| Complex64::new(x / norm, 0.0))
            .collect();
        let state =
            PureState::new(crate::linalg::CVector::from_vec(amps), &Tolerances::default())?
                .to_density();
        let n_qubits = dim.trailing_zeros() as usize;
        Ok(EncodedInput {
            features: features.to_vec(),
            encoding: Encoding::Amplitude,
            circuit: CircuitIR::empty(n_qubits),
            state,
        })
    }

    /// Same encoding applied to a new feature vector.
    pub fn re_encode(&self, new_features: &[f64]) -> Result<Self, AttackError> {
        if new_features.len() != self.features.len() {
            return Err(AttackError::BadEncoding(format!(
                "feature count changed from {} to {}",
                self.features.len(),
                new_features.len()
            )));
        }
        match self.encoding {
            Encoding::Angle => EncodedInput::from_circuit(self.circuit.clone(), new_features),
            Encoding::Amplitude => EncodedInput::amplitude(new_features),
        }
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn circuit(&self) -> &CircuitIR {
        &self.circuit
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// Input dimension `N_x`.
    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// The scalar loss driving the attack gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossSpec {
    /// `L = −log p_{c*}` on the winning class of the unperturbed input.
    #[default]
    NegLogWinner,
    /// `L = p₀ − p₁` (binary classifiers only).
    ZExpectation,
}

/// Attack strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackStrategy {
    Fgsm,
    MaskFgsm,
}

/// Configuration for [`run_attack`].
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub strategy: AttackStrategy,
    /// Initial step size `ε_step` (doubled on each escalation).
    pub strength: f64,
    /// Fraction of features perturbed by Mask-FGSM (top `⌈f·N_x⌉` by
    /// gradient magnitude).
    pub mask_fraction: f64,
    /// Maximum number of geometric escalations after the initial step.
    pub max_escalations: u32,
    /// Finite-shot gradient mode: shots per expectation evaluation.
    pub shots: Option<u32>,
    /// Seed for the finite-shot sampler.
    pub seed: u64,
    pub loss: LossSpec,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            strategy: AttackStrategy::Fgsm,
            strength: 0.05,
            mask_fraction: 0.25,
            max_escalations: 10,
            shots: None,
            seed: 0,
            loss: LossSpec::NegLogWinner,
        }
    }
}

/// Default shot count when finite-shot mode is enabled without a count.
pub const DEFAULT_SHOTS: u32 = 1024;

impl AttackConfig {
    fn validate(&self, dim: usize) -> Result<(), AttackError> {
        if !(self.strength > 0.0) || !self.strength.is_finite() {
            return Err(AttackError::BadConfig(format!(
                "strength must be positive, got {}",
                self.strength
            )));
        }
        if self.strategy == AttackStrategy::MaskFgsm {
            if !(self.mask_fraction > 0.0 && self.mask_fraction <= 1.0) {
                return Err(AttackError::BadConfig(format!(
                    "mask_fraction must lie in (0,1], got {}",
                    self.mask_fraction
                )));
            }
            if ((self.mask_fraction * dim as f64).ceil() as usize) < 1 {
                return Err(AttackError::BadConfig(
                    "mask selects no features".into(),
                ));
            }
        }
        if let Some(shots) = self.shots {
            if shots == 0 {
                return Err(AttackError::BadConfig("shots must be ≥ 1".into()));
            }
        }
        Ok(())
    }
}

/// Outcome of one attack.
#[derive(Debug, Clone)]
pub struct AttackResult {
    pub success: bool,
    /// The perturbed input, present on success.
    pub adversarial_input: Option<EncodedInput>,
    /// `ε_RUB = D_F(ρ(x), ρ(x'))`, present on success.
    pub rub: Option<f64>,
    /// Escalations consumed (0 = the initial step succeeded).
    pub escalations_used: u32,
}

/// Evaluate the classifier's outcome distribution at a feature binding of
/// the encoding circuit.
fn distribution_at(
    a: &Classifier,
    circuit: &CircuitIR,
    binding: &[f64],
    shots: Option<(u32, &mut SplitMix64)>,
    tol: &Tolerances,
) -> Result<Vec<f64>, AttackError> {
    let state = simulate_pure(circuit, binding)?.to_density();
    let exact = a.outcome_distribution(&state, tol)?;
    match shots {
        None => Ok(exact),
        Some((n, rng)) => Ok(sample_distribution(&exact, n, rng)),
    }
}

/// Multinomial finite-shot estimate of a distribution.
fn sample_distribution(p: &[f64], shots: u32, rng: &mut SplitMix64) -> Vec<f64> {
    let mut counts = vec![0u64; p.len()];
    for _ in 0..shots {
        let u = rng.next_f64();
        let mut acc = 0.0;
        let mut chosen = p.len() - 1;
        for (c, &pc) in p.iter().enumerate() {
            acc += pc;
            if u < acc {
                chosen = c;
                break;
            }
        }
        counts[chosen] += 1;
    }
    counts
        .iter()
        .map(|&c| c as f64 / shots as f64)
        .collect()
}

/// Derivative of the loss with respect to the outcome probabilities.
fn loss_probability_gradient(
    loss: LossSpec,
    dist: &[f64],
    winner: usize,
) -> Result<Vec<f64>, AttackError> {
    match loss {
        LossSpec::NegLogWinner => {
            let mut g = vec![0.0; dist.len()];
            g[winner] = -1.0 / dist[winner].max(1e-9);
            Ok(g)
        }
        LossSpec::ZExpectation => {
            if dist.len() != 2 {
                return Err(AttackError::BadConfig(format!(
                    "ZExpectation loss needs a binary classifier, got {} classes",
                    dist.len()
                )));
            }
            Ok(vec![1.0, -1.0])
        }
    }
}

fn ensure_shiftable(input: &EncodedInput) -> Result<(), AttackError> {
    if input.encoding != Encoding::Angle {
        return Err(AttackError::NonShiftableGate {
            gate: "amplitude encoding".into(),
        });
    }
    for gate in input.circuit.gates() {
        // Only slotted gates are shifted; fixed gates (entanglers, Hadamards
        // in a preparation layout) may be anything. Slot uniqueness — which
        // the ±π/2 rule relies on — is a circuit invariant checked at
        // construction.
        let carries_slot = gate.param_slots.iter().any(Option::is_some);
        if carries_slot && !gate.kind.is_shiftable_rotation() {
            return Err(AttackError::NonShiftableGate {
                gate: gate.kind.name().into(),
            });
        }
    }
    Ok(())
}

/// Parameter-shift gradient of the loss with respect to the features,
/// using exact outcome probabilities.
///
/// Each probability's partial derivative is
/// `[p_c(θ_i + π/2) − p_c(θ_i − π/2)] / 2` (exact for single-occurrence
/// rotation encodings), chained through the loss.
pub fn parameter_shift_gradient(
    a: &Classifier,
    input: &EncodedInput,
    loss: LossSpec,
    tol: &Tolerances,
) -> Result<Vec<f64>, AttackError> {
    parameter_shift_gradient_impl(a, input, loss, None, tol)
}

/// Finite-shot variant: every expectation evaluation samples `shots`
/// measurement outcomes from the seeded PRNG (`2·N_x` evaluations total,
/// matching the `2·N_s·N_x` circuit-execution cost model).
pub fn parameter_shift_gradient_sampled(
    a: &Classifier,
    input: &EncodedInput,
    loss: LossSpec,
    shots: u32,
    rng: &mut SplitMix64,
    tol: &Tolerances,
) -> Result<Vec<f64>, AttackError> {
    parameter_shift_gradient_impl(a, input, loss, Some((shots, rng)), tol)
}

fn parameter_shift_gradient_impl(
    a: &Classifier,
    input: &EncodedInput,
    loss: LossSpec,
    mut shots: Option<(u32, &mut SplitMix64)>,
    tol: &Tolerances,
) -> Result<Vec<f64>, AttackError> {
    ensure_shiftable(input)?;
    let base = distribution_at(
        a,
        &input.circuit,
        &input.features,
        shots.as_mut().map(|(n, rng)| (*n, &mut **rng)),
        tol,
    )?;
    let winner = crate::classifier::argmax_tie_smallest(&base);
    let dl_dp = loss_probability_gradient(loss, &base, winner)?;
    let mut grad = vec![0.0; input.features.len()];
    for i in 0..input.features.len() {
        let mut plus = input.features.clone();
        plus[i] += std::f64::consts::FRAC_PI_2;
        let mut minus = input.features.clone();
        minus[i] -= std::f64::consts::FRAC_PI_2;
        let p_plus = distribution_at(
            a,
            &input.circuit,
            &plus,
            shots.as_mut().map(|(n, rng)| (*n, &mut **rng)),
            tol,
        )?;
        let p_minus = distribution_at(
            a,
            &input.circuit,
            &minus,
            shots.as_mut().map(|(n, rng)| (*n, &mut **rng)),
            tol,
        )?;
        let mut g = 0.0;
        for c in 0..base.len() {
            g += dl_dp[c] * (p_plus[c] - p_minus[c]) / 2.0;
        }
        grad[i] = g;
    }
    Ok(grad)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// FGSM step: `x' = x + eps · sgn(grad)` with `sgn(0) = 0`.
pub fn fgsm_step(x: &[f64], grad: &[f64], eps: f64) -> Vec<f64> {
    x.iter()
        .zip(grad.iter())
        .map(|(&xi, &gi)| xi + eps * sign(gi))
        .collect()
}

/// Mask-FGSM step: perturb only the `⌈mask_fraction·dim⌉` features with
/// the largest gradient magnitudes (ties broken toward smaller indices).
pub fn mask_fgsm_step(x: &[f64], grad: &[f64], eps: f64, mask_fraction: f64) -> Vec<f64> {
    let dim = x.len();
    let k = ((mask_fraction * dim as f64).ceil() as usize).clamp(1, dim);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        grad[j]
            .abs()
            .partial_cmp(&grad[i].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut mask = vec![false; dim];
    for &i in order.iter().take(k) {
        mask[i] = true;
    }
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            if mask[i] {
                xi + eps * sign(grad[i])
            } else {
                xi
            }
        })
        .collect()
}

/// Run the configured attack against one encoded input.
///
/// The gradient (and hence the perturbation direction) is computed once at
/// the unperturbed input; only the step size escalates, doubling after
/// each attempt that leaves the classification unchanged, for at most
/// `max_escalations` escalations beyond the initial step. Success is
/// judged on exact probabilities even in finite-shot mode, so a reported
/// success is never sampling noise. On success,
/// `ε_RUB = D_F(ρ(x), ρ(x'))`.
pub fn run_attack(
    a: &Classifier,
    input: &EncodedInput,
    cfg: &AttackConfig,
    tol: &Tolerances,
) -> Result<AttackResult, AttackError> {
    cfg.validate(input.dim())?;
    let original_label = a.classify(input.state(), tol)?;
    let grad = match cfg.shots {
        None => parameter_shift_gradient(a, input, cfg.loss, tol)?,
        Some(shots) => {
            let mut rng = SplitMix64::new(cfg.seed);
            parameter_shift_gradient_sampled(a, input, cfg.loss, shots, &mut rng, tol)?
        }
    };
    let step = |eps: f64| match cfg.strategy {
        AttackStrategy::Fgsm => fgsm_step(&input.features, &grad, eps),
        AttackStrategy::MaskFgsm => mask_fgsm_step(&input.features, &grad, eps, cfg.mask_fraction),
    };
    let mut eps = cfg.strength;
    let mut last_failed = 0.0;
    for escalation in 0..=cfg.max_escalations {
        let candidate = input.re_encode(&step(eps))?;
        let label = a.classify(candidate.state(), tol)?;
        if label != original_label {
            // Bisect back toward the boundary between the last failing and
            // the succeeding step size: the tightened upper bound doubles as
            // a near-boundary witness, which is what retraining wants.
            let candidate = refine_step(
                a,
                input,
                &step,
                original_label,
                last_failed,
                eps,
                candidate,
                tol,
            )?;
            let rub = fidelity_distance(input.state(), candidate.state(), tol)?;
            return Ok(AttackResult {
                success: true,
                adversarial_input: Some(candidate),
                rub: Some(rub),
                escalations_used: escalation,
            });
        }
        last_failed = eps;
        eps *= 2.0;
    }
    Ok(AttackResult {
        success: false,
        adversarial_input: None,
        rub: None,
        escalations_used: cfg.max_escalations,
    })
}

/// Binary-search the step size in `(lo, hi]` for the smallest flip the
/// search resolves, keeping the success invariant on the returned input.
#[allow(clippy::too_many_arguments)]
fn refine_step(
    a: &Classifier,
    input: &EncodedInput,
    step: &dyn Fn(f64) -> Vec<f64>,
    original_label: usize,
    mut lo: f64,
    mut hi: f64,
    mut best: EncodedInput,
    tol: &Tolerances,
) -> Result<EncodedInput, AttackError> {
    const REFINE_ITERS: u32 = 40;
    for _ in 0..REFINE_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let candidate = input.re_encode(&step(mid))?;
        if a.classify(candidate.state(), tol)? != original_label {
            hi = mid;
            best = candidate;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}
