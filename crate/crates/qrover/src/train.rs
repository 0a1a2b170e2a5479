//! Variational-model training, dataset generation, and critical-sample
//! selection.
//!
//! A [`VariationalModel`] is a trainable circuit (parameter slots bound by
//! `theta`) measured by a POVM. [`train`] runs plain parameter-shift
//! gradient descent on the mean cross-entropy; with
//! [`TrainConfig::adversarial`] it follows a clean phase with a retraining
//! phase on the training set augmented by harvested adversarial examples
//! carrying the original (correct) labels.
//!
//! Dataset generators ([`generate_lcei`], [`generate_synthetic`]) produce
//! small, seed-deterministic classification tasks; [`critical_samples`]
//! selects the least-robust slice of a verification report.

use crate::attack::{run_attack, AttackConfig, AttackError, EncodedInput};
use crate::bounds::{optimal_radius, BoundsError};
use crate::circuit::{CircuitError, CircuitIR, GateKind, GateOp};
use crate::classifier::{Classifier, ClassifierError, Povm};
use crate::exec::{map_items, Jobs};
use crate::linalg::{dagger, trace, CMatrix};
use crate::rng::SplitMix64;
use crate::sdp::SdpConfig;
use crate::sim::{circuit_unitary, simulate_pure, simulate_pure_from, SimError};
use crate::state::{fidelity, PureState, StateError};
use crate::tol::Tolerances;
use crate::verify::{DatasetItem, LabeledDataset, LabeledItem, VerificationReport};

/// Errors from training and dataset generation.
#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training dataset `{name}` is empty")]
    EmptyDataset { name: String },
    #[error("bad training configuration: {0}")]
    BadConfig(String),
    #[error("model has {slots} parameter slots but theta has length {theta}")]
    ThetaLengthMismatch { slots: usize, theta: usize },
    #[error("item {index} carries label `{label}` which is not a POVM outcome")]
    UnknownLabel { index: usize, label: String },
    #[error("loss diverged to a non-finite value {loss} at epoch {epoch}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("bad generator arguments: {0}")]
    BadGenerator(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// A variational classifier: a circuit whose parameter slots are bound by
/// `theta`, measured by `povm`.
///
/// Invariant: `theta.len() == circuit.slot_count()`.
#[derive(Debug, Clone)]
pub struct VariationalModel {
    /// Trainable circuit; slots `0..theta.len()` bind `theta` in order.
    pub circuit: CircuitIR,
    /// Current parameter values.
    pub theta: Vec<f64>,
    /// Measurement deciding the class.
    pub povm: Povm,
}

impl VariationalModel {
    /// Hardware-efficient layered ansatz: each of `layers` layers applies
    /// `ry(θ)` then `rz(θ)` to every qubit followed by a `cx` chain
    /// `0→1→…→n−1` (omitted on one qubit). Initial angles are drawn
    /// uniformly from `(−π/8, π/8]`, deterministically from `seed`.
    pub fn layered(
        n_qubits: usize,
        layers: usize,
        measured_qubit: usize,
        seed: u64,
    ) -> Result<Self, TrainError> {
        if n_qubits == 0 {
            return Err(TrainError::BadConfig("zero qubits".into()));
        }
        if layers == 0 {
            return Err(TrainError::BadConfig("zero ansatz layers".into()));
        }
        if measured_qubit >= n_qubits {
            return Err(TrainError::BadConfig(format!(
                "measured qubit {measured_qubit} out of range for {n_qubits} qubits"
            )));
        }
        let mut circuit = CircuitIR::empty(n_qubits);
        let mut rng = SplitMix64::new(seed);
        let mut theta = Vec::new();
        let mut slot = 0u32;
        for _ in 0..layers {
            for q in 0..n_qubits {
                for kind in [GateKind::Ry, GateKind::Rz] {
                    let angle = rng.next_f64_range(
                        -std::f64::consts::FRAC_PI_8,
                        std::f64::consts::FRAC_PI_8,
                    );
                    circuit.push_gate(GateOp::rotation_slot(kind, q, angle, slot));
                    theta.push(angle);
                    slot += 1;
                }
            }
            for q in 0..n_qubits.saturating_sub(1) {
                circuit.push_gate(GateOp::new(GateKind::Cx, vec![q, q + 1], vec![]));
            }
        }
        let povm = Povm::z_basis_on(n_qubits, measured_qubit);
        let model = VariationalModel {
            circuit,
            theta,
            povm,
        };
        model.validate()?;
        Ok(model)
    }

    /// Check the theta/slot invariant and circuit well-formedness.
    pub fn validate(&self) -> Result<(), TrainError> {
        self.circuit.validate()?;
        let slots = self.circuit.slot_count();
        if self.theta.len() != slots {
            return Err(TrainError::ThetaLengthMismatch {
                slots,
                theta: self.theta.len(),
            });
        }
        if let Some(k) = self.theta.iter().position(|t| !t.is_finite()) {
            return Err(TrainError::BadConfig(format!(
                "theta[{k}] is not finite: {}",
                self.theta[k]
            )));
        }
        Ok(())
    }

    /// Number of trainable parameters.
    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    /// The circuit with every slot resolved to the current `theta`.
    pub fn bound_circuit(&self) -> CircuitIR {
        self.circuit.bind(&self.theta)
    }

    /// Compile the bound circuit into a fixed classifier.
    pub fn classifier(&self, tol: &Tolerances) -> Result<Classifier, TrainError> {
        self.validate()?;
        Ok(Classifier::from_circuit(
            &self.bound_circuit(),
            None,
            self.povm.clone(),
            tol,
        )?)
    }

    /// Fraction of `data` classified into its labeled class by the current
    /// parameters.
    pub fn accuracy(&self, data: &LabeledDataset, tol: &Tolerances) -> Result<f64, TrainError> {
        if data.items.is_empty() {
            return Err(TrainError::EmptyDataset {
                name: data.name.clone(),
            });
        }
        let clf = self.classifier(tol)?;
        let mut correct = 0usize;
        for (index, li) in data.items.iter().enumerate() {
            let want = self.povm.label_index(&li.label).ok_or_else(|| {
                TrainError::UnknownLabel {
                    index,
                    label: li.label.clone(),
                }
            })?;
            if clf.classify(li.item.state(), tol)? == want {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.items.len() as f64)
    }
}

/// Gradient-descent configuration.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Passes over the training set (per phase when adversarial).
    pub epochs: usize,
    /// Step size for plain gradient descent. Must be finite and positive.
    pub learning_rate: f64,
    /// Minibatch size; `0` trains on the full batch each step.
    pub batch: usize,
    /// Seeds the epoch shuffles (and any finite-shot attack sampling).
    pub seed: u64,
    /// After the clean phase, harvest adversarial examples for every
    /// training item and retrain on the augmented set.
    pub adversarial: bool,
    /// Attack used for harvesting feature-space adversarial examples;
    /// `None` uses [`AttackConfig::default`].
    pub attack_cfg: Option<AttackConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            learning_rate: 0.25,
            batch: 0,
            seed: 0,
            adversarial: false,
            attack_cfg: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(TrainError::BadConfig(format!(
                "learning rate must be finite and positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The model with final parameters.
    pub model: VariationalModel,
    /// Mean cross-entropy over the full (possibly augmented) training set:
    /// one entry before training and one after each epoch; the adversarial
    /// phase appends its own curve measured on the augmented set.
    pub loss_curve: Vec<f64>,
    /// Number of adversarial examples added to the training set
    /// (0 for clean training or when harvesting finds none).
    pub adversarial_added: usize,
}

/// Floor for probabilities inside the cross-entropy log.
const LOG_CLAMP: f64 = 1e-12;

/// One training item reduced to what evaluation needs: a way to compute
/// `p_label(θ)`, the labeled class index, and a loss weight.
struct PreparedItem {
    eval: PreparedEval,
    label: usize,
    weight: f64,
}

enum PreparedEval {
    /// Encoded item: the preparation output is fixed during training, so it
    /// is simulated once and the ansatz runs from it.
    Pure { prep: PureState },
    /// Raw density input evolved by the bound ansatz.
    Raw { rho: CMatrix },
}

impl PreparedEval {
    /// `p_label(θ) = ⟨M_label⟩` after the ansatz at parameters `theta`.
    fn probability(
        &self,
        ansatz: &CircuitIR,
        theta: &[f64],
        effect: &CMatrix,
    ) -> Result<f64, TrainError> {
        match self {
            PreparedEval::Pure { prep } => {
                let out = simulate_pure_from(ansatz, theta, prep)?;
                let v = out.vector();
                Ok((v.adjoint() * effect * v)[(0, 0)].re)
            }
            PreparedEval::Raw { rho } => {
                let u = circuit_unitary(ansatz, theta)?;
                let evolved = &u * rho * dagger(&u);
                Ok(trace(&(effect * evolved)).re)
            }
        }
    }
}

fn prepare_items(
    model: &VariationalModel,
    items: &[(LabeledItem, f64)],
) -> Result<Vec<PreparedItem>, TrainError> {
    items
        .iter()
        .enumerate()
        .map(|(index, (li, weight))| {
            let label =
                model
                    .povm
                    .label_index(&li.label)
                    .ok_or_else(|| TrainError::UnknownLabel {
                        index,
                        label: li.label.clone(),
                    })?;
            let eval = match &li.item {
                DatasetItem::Encoded(e) => PreparedEval::Pure {
                    prep: simulate_pure(e.circuit(), e.features())?,
                },
                DatasetItem::State(rho) => PreparedEval::Raw {
                    rho: rho.matrix().clone(),
                },
            };
            Ok(PreparedItem {
                eval,
                label,
                weight: *weight,
            })
        })
        .collect()
}

/// Weighted mean cross-entropy over `items` at parameters `theta`.
fn mean_loss(
    model: &VariationalModel,
    items: &[PreparedItem],
    theta: &[f64],
    jobs: Jobs,
) -> Result<f64, TrainError> {
    let terms: Vec<Result<f64, TrainError>> = map_items(jobs, items, |_, it| {
        let p = it
            .eval
            .probability(&model.circuit, theta, &model.povm.elements()[it.label])?;
        Ok(-it.weight * p.max(LOG_CLAMP).ln())
    });
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for (term, it) in terms.into_iter().zip(items) {
        total += term?;
        weight_sum += it.weight;
    }
    Ok(total / weight_sum)
}

/// Weighted mean gradient of the cross-entropy over the referenced items,
/// via the parameter-shift rule applied to every trainable slot.
fn mean_gradient(
    model: &VariationalModel,
    items: &[&PreparedItem],
    theta: &[f64],
    jobs: Jobs,
) -> Result<Vec<f64>, TrainError> {
    let n_params = theta.len();
    let per_item: Vec<Result<Vec<f64>, TrainError>> = map_items(jobs, items, |_, it| {
        let effect = &model.povm.elements()[it.label];
        let p = it.eval.probability(&model.circuit, theta, effect)?;
        // d(−ln p)/dp, with the same clamp as the loss.
        let dl_dp = -1.0 / p.max(LOG_CLAMP);
        let mut g = vec![0.0; n_params];
        let mut shifted = theta.to_vec();
        for k in 0..n_params {
            shifted[k] = theta[k] + std::f64::consts::FRAC_PI_2;
            let plus = it.eval.probability(&model.circuit, &shifted, effect)?;
            shifted[k] = theta[k] - std::f64::consts::FRAC_PI_2;
            let minus = it.eval.probability(&model.circuit, &shifted, effect)?;
            shifted[k] = theta[k];
            g[k] = it.weight * dl_dp * (plus - minus) / 2.0;
        }
        Ok(g)
    });
    let mut grad = vec![0.0; n_params];
    let mut weight_sum = 0.0;
    for (res, it) in per_item.into_iter().zip(items) {
        let g = res?;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
        weight_sum += it.weight;
    }
    for v in &mut grad {
        *v /= weight_sum;
    }
    Ok(grad)
}

/// One gradient-descent phase over `items`. Returns the final parameters and
/// the loss curve (initial loss, then one entry per epoch).
fn descend(
    model: &VariationalModel,
    items: &[PreparedItem],
    mut theta: Vec<f64>,
    cfg: &TrainConfig,
    rng: &mut SplitMix64,
    jobs: Jobs,
) -> Result<(Vec<f64>, Vec<f64>), TrainError> {
    let mut curve = Vec::with_capacity(cfg.epochs + 1);
    let initial = mean_loss(model, items, &theta, jobs)?;
    if !initial.is_finite() {
        return Err(TrainError::Diverged {
            epoch: 0,
            loss: initial,
        });
    }
    curve.push(initial);
    let batch = if cfg.batch == 0 || cfg.batch >= items.len() {
        items.len()
    } else {
        cfg.batch
    };
    let mut order: Vec<usize> = (0..items.len()).collect();
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(batch) {
            let view: Vec<&PreparedItem> = chunk.iter().map(|&i| &items[i]).collect();
            let grad = mean_gradient(model, &view, &theta, jobs)?;
            for (t, g) in theta.iter_mut().zip(grad) {
                *t -= cfg.learning_rate * g;
            }
        }
        let loss = mean_loss(model, items, &theta, jobs)?;
        if !loss.is_finite() {
            return Err(TrainError::Diverged { epoch, loss });
        }
        curve.push(loss);
    }
    Ok((theta, curve))
}

/// Train `model` on `data` by parameter-shift gradient descent on the mean
/// cross-entropy `−(1/Σw) Σ w_i ln p_{y_i}`.
///
/// With `cfg.adversarial`, after the clean phase an adversarial example is
/// harvested for every training item — a gradient attack for encoded
/// (feature) items, the exact-radius witness for raw states — and a second
/// descent phase runs on the augmented set, each example carrying its
/// original item's correct label. Raw-state witnesses are weighted by their
/// fidelity to the clean item (a soft target: nearer counterexamples count
/// more); feature witnesses keep full weight. When nothing is harvested the
/// result is identical to clean training.
///
/// Deterministic for fixed inputs, `cfg.seed`, and any `jobs`.
pub fn train(
    model: &VariationalModel,
    data: &LabeledDataset,
    cfg: &TrainConfig,
    jobs: Jobs,
    tol: &Tolerances,
) -> Result<TrainOutcome, TrainError> {
    model.validate()?;
    cfg.validate()?;
    if data.items.is_empty() {
        return Err(TrainError::EmptyDataset {
            name: data.name.clone(),
        });
    }
    let clean: Vec<(LabeledItem, f64)> =
        data.items.iter().map(|li| (li.clone(), 1.0)).collect();
    let prepared = prepare_items(model, &clean)?;
    let mut rng = SplitMix64::new(cfg.seed);
    let (theta, mut curve) = descend(model, &prepared, model.theta.clone(), cfg, &mut rng, jobs)?;
    let mut trained = VariationalModel {
        circuit: model.circuit.clone(),
        theta,
        povm: model.povm.clone(),
    };

    let mut adversarial_added = 0usize;
    if cfg.adversarial {
        let harvested = harvest_adversarial(&trained, data, cfg, jobs, tol)?;
        adversarial_added = harvested.len();
        if !harvested.is_empty() {
            let mut augmented = clean;
            augmented.extend(harvested);
            let prepared = prepare_items(&trained, &augmented)?;
            let (theta, phase2) =
                descend(&trained, &prepared, trained.theta.clone(), cfg, &mut rng, jobs)?;
            trained.theta = theta;
            curve.extend(phase2);
        }
    }

    Ok(TrainOutcome {
        model: trained,
        loss_curve: curve,
        adversarial_added,
    })
}

/// Harvest one adversarial example per training item against the current
/// model: encoded items are attacked in feature space (failures are
/// skipped), raw states take their minimal-distance misclassified witness
/// weighted by fidelity to the original.
fn harvest_adversarial(
    model: &VariationalModel,
    data: &LabeledDataset,
    cfg: &TrainConfig,
    jobs: Jobs,
    tol: &Tolerances,
) -> Result<Vec<(LabeledItem, f64)>, TrainError> {
    let clf = model.classifier(tol)?;
    let attack_cfg = cfg.attack_cfg.clone().unwrap_or_default();
    let sdp_cfg = SdpConfig::from_env().map_err(TrainError::BadConfig)?;
    let results: Vec<Result<Option<(LabeledItem, f64)>, TrainError>> =
        map_items(jobs, &data.items, |index, li| match &li.item {
            DatasetItem::Encoded(input) => {
                let mut per_item = attack_cfg.clone();
                per_item.seed = attack_cfg.seed ^ index as u64;
                let res = run_attack(&clf, input, &per_item, tol)?;
                Ok(res.adversarial_input.map(|adv| {
                    (
                        LabeledItem {
                            item: DatasetItem::Encoded(adv),
                            label: li.label.clone(),
                        },
                        1.0,
                    )
                }))
            }
            DatasetItem::State(rho) => {
                let opt = optimal_radius(&clf, rho, &sdp_cfg, Jobs::Sequential, tol)?;
                match opt.witness {
                    Some(sigma) => {
                        let f = fidelity(rho, &sigma, tol)?;
                        Ok(Some((
                            LabeledItem {
                                item: DatasetItem::State(sigma),
                                label: li.label.clone(),
                            },
                            f.clamp(0.0, 1.0),
                        )))
                    }
                    None => Ok(None),
                }
            }
        });
    let mut out = Vec::new();
    for res in results {
        if let Some(pair) = res? {
            out.push(pair);
        }
    }
    Ok(out)
}

/// Label threshold for [`generate_lcei`]: `|α| > π/4` is "excited".
pub const LCEI_THRESHOLD: f64 = std::f64::consts::FRAC_PI_4;

/// Label strings used by the LCEI generator.
pub const LCEI_LABELS: [&str; 2] = ["non-excited", "excited"];

/// Generate a linear-cluster-excitation-identification dataset.
///
/// Each item prepares a linear cluster state (`H` on all qubits, `CZ` on
/// neighboring pairs) followed by `rx(α)` on the last qubit, and is labeled
/// `"excited"` when `|α| > π/4`, else `"non-excited"`. Items alternate
/// classes starting with non-excited, and `α` is drawn uniformly from the
/// class's band inside `alpha_range` — deterministic in `seed`.
///
/// `n_qubits` must be in `2..=6` and `alpha_range` must contain both bands.
pub fn generate_lcei(
    n_qubits: usize,
    n_samples: usize,
    alpha_range: (f64, f64),
    seed: u64,
) -> Result<LabeledDataset, TrainError> {
    generate_lcei_with_threshold(n_qubits, n_samples, alpha_range, seed, LCEI_THRESHOLD)
}

/// [`generate_lcei`] with an explicit `|α|` label threshold.
pub fn generate_lcei_with_threshold(
    n_qubits: usize,
    n_samples: usize,
    alpha_range: (f64, f64),
    seed: u64,
    threshold: f64,
) -> Result<LabeledDataset, TrainError> {
    if !(2..=6).contains(&n_qubits) {
        return Err(TrainError::BadGenerator(format!(
            "LCEI needs 2..=6 qubits, got {n_qubits}"
        )));
    }
    if n_samples == 0 {
        return Err(TrainError::BadGenerator("zero samples".into()));
    }
    let (lo, hi) = alpha_range;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(TrainError::BadGenerator(format!(
            "bad alpha range ({lo}, {hi})"
        )));
    }
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(TrainError::BadGenerator(format!(
            "bad threshold {threshold}"
        )));
    }
    // Band of each class inside the range: non-excited is the single
    // interval [−T, T] ∩ range; excited is what the range keeps outside it.
    let ne_lo = lo.max(-threshold);
    let ne_hi = hi.min(threshold);
    if ne_lo >= ne_hi {
        return Err(TrainError::BadGenerator(
            "alpha range contains no non-excited band".into(),
        ));
    }
    let ex_left = (lo, hi.min(-threshold)); // below −T
    let ex_right = (lo.max(threshold), hi); // above +T
    let left_len = (ex_left.1 - ex_left.0).max(0.0);
    let right_len = (ex_right.1 - ex_right.0).max(0.0);
    if left_len + right_len <= 0.0 {
        return Err(TrainError::BadGenerator(
            "alpha range contains no excited band".into(),
        ));
    }

    let mut rng = SplitMix64::new(seed);
    let mut items = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let excited = i % 2 == 1;
        let alpha = loop {
            let draw = if excited {
                let u = rng.next_f64() * (left_len + right_len);
                if u < left_len {
                    ex_left.0 + u
                } else {
                    ex_right.0 + (u - left_len)
                }
            } else {
                ne_lo + rng.next_f64() * (ne_hi - ne_lo)
            };
            // Redraw on an exact boundary hit so the label always matches
            // the intended class.
            if (draw.abs() > threshold) == excited {
                break draw;
            }
        };
        let mut circuit = CircuitIR::empty(n_qubits);
        for q in 0..n_qubits {
            circuit.push_gate(GateOp::simple(GateKind::H, q));
        }
        for q in 0..n_qubits - 1 {
            circuit.push_gate(GateOp::new(GateKind::Cz, vec![q, q + 1], vec![]));
        }
        circuit.push_gate(GateOp::rotation_slot(GateKind::Rx, n_qubits - 1, alpha, 0));
        let input = EncodedInput::from_circuit(circuit, &[alpha])?;
        items.push(LabeledItem {
            item: DatasetItem::Encoded(input),
            label: LCEI_LABELS[usize::from(excited)].to_string(),
        });
    }
    Ok(LabeledDataset::new(format!("lcei-{n_qubits}q"), items))
}

/// The POVM matching [`generate_lcei`] labels: a Z-basis measurement of the
/// last qubit with outcomes relabeled `non-excited`/`excited`.
pub fn lcei_povm(n_qubits: usize) -> Result<Povm, TrainError> {
    let base = Povm::z_basis_on(n_qubits, n_qubits - 1);
    Ok(Povm::new(
        LCEI_LABELS.iter().map(|s| s.to_string()).collect(),
        base.elements().to_vec(),
        &Tolerances::default(),
    )?)
}

/// Generate a synthetic classical-feature dataset: two Gaussian blobs in
/// angle space, centered at `+0.9` (label `"0"`) and `−0.9` (label `"1"`)
/// per dimension with standard deviation `0.3`, angle-encoded on
/// `n_features` qubits. Items alternate classes starting with `"0"`;
/// deterministic in `seed`.
pub fn generate_synthetic(
    n_features: usize,
    n_samples: usize,
    seed: u64,
) -> Result<LabeledDataset, TrainError> {
    if n_features == 0 {
        return Err(TrainError::BadGenerator("zero features".into()));
    }
    if n_samples == 0 {
        return Err(TrainError::BadGenerator("zero samples".into()));
    }
    const CENTER: f64 = 0.9;
    const STD: f64 = 0.3;
    let mut rng = SplitMix64::new(seed);
    let mut items = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let class = i % 2;
        let center = if class == 0 { CENTER } else { -CENTER };
        let features: Vec<f64> = (0..n_features)
            .map(|_| center + STD * rng.next_gaussian())
            .collect();
        let input = EncodedInput::angle(&features, n_features)?;
        items.push(LabeledItem {
            item: DatasetItem::Encoded(input),
            label: class.to_string(),
        });
    }
    Ok(LabeledDataset::new(format!("synthetic-{n_features}d"), items))
}

/// Default fraction for [`critical_samples`].
pub const DEFAULT_CRITICAL_FRACTION: f64 = 0.20;

/// Indices of the `⌊fraction · |T|⌋` items with the smallest certified
/// lower bound (ties broken toward the smaller index), returned in
/// ascending index order. Items without a lower bound (misclassified) are
/// never selected.
pub fn critical_samples(report: &VerificationReport, fraction: f64) -> Vec<usize> {
    let total = report.per_item.len();
    let k = ((fraction * total as f64).floor() as usize).min(total);
    let mut candidates: Vec<(f64, usize)> = report
        .per_item
        .iter()
        .filter_map(|it| it.rlb.map(|r| (r, it.index)))
        .collect();
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut picked: Vec<usize> = candidates.into_iter().take(k).map(|(_, i)| i).collect();
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{ItemReport, Verdict, VerifyMethod};

    fn toy_linear_dataset() -> LabeledDataset {
        // One feature, linearly separable: positive angles are class "0",
        // negative angles class "1".
        let xs = [0.7, 0.9, 0.8, 1.0, -0.7, -0.9, -0.8, -1.0];
        let items = xs
            .iter()
            .map(|&x| LabeledItem {
                item: DatasetItem::Encoded(EncodedInput::angle(&[x], 1).unwrap()),
                label: if x > 0.0 { "0".into() } else { "1".into() },
            })
            .collect();
        LabeledDataset::new("toy-linear", items)
    }

    #[test]
    fn layered_model_satisfies_invariant() {
        let m = VariationalModel::layered(3, 2, 2, 7).unwrap();
        assert_eq!(m.n_params(), 3 * 2 * 2);
        assert_eq!(m.circuit.slot_count(), m.theta.len());
        m.validate().unwrap();
    }

    #[test]
    fn theta_length_mismatch_is_rejected() {
        let mut m = VariationalModel::layered(2, 1, 0, 0).unwrap();
        m.theta.pop();
        assert!(matches!(
            m.validate(),
            Err(TrainError::ThetaLengthMismatch { .. })
        ));
    }

    #[test]
    fn toy_set_trains_to_full_accuracy() {
        let tol = Tolerances::default();
        let model = VariationalModel::layered(1, 1, 0, 3).unwrap();
        let data = toy_linear_dataset();
        let cfg = TrainConfig::default();
        let out = train(&model, &data, &cfg, Jobs::Sequential, &tol).unwrap();
        assert_eq!(out.loss_curve.len(), cfg.epochs + 1);
        let initial = out.loss_curve[0];
        let last = *out.loss_curve.last().unwrap();
        assert!(last < initial, "loss did not decrease: {initial} -> {last}");
        let acc = out.model.accuracy(&data, &tol).unwrap();
        assert_eq!(acc, 1.0, "training accuracy {acc}");
    }

    #[test]
    fn zero_epochs_leaves_parameters_unchanged() {
        let tol = Tolerances::default();
        let model = VariationalModel::layered(1, 1, 0, 3).unwrap();
        let data = toy_linear_dataset();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = train(&model, &data, &cfg, Jobs::Sequential, &tol).unwrap();
        assert_eq!(out.model.theta, model.theta);
        assert_eq!(out.loss_curve.len(), 1);
    }

    #[test]
    fn training_is_deterministic_and_jobs_invariant() {
        let tol = Tolerances::default();
        let model = VariationalModel::layered(1, 1, 0, 5).unwrap();
        let data = toy_linear_dataset();
        let cfg = TrainConfig {
            epochs: 8,
            batch: 3,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train(&model, &data, &cfg, Jobs::Sequential, &tol).unwrap();
        let b = train(&model, &data, &cfg, Jobs::Sequential, &tol).unwrap();
        let c = train(&model, &data, &cfg, Jobs::Auto, &tol).unwrap();
        assert_eq!(a.model.theta, b.model.theta);
        assert_eq!(a.loss_curve, b.loss_curve);
        assert_eq!(a.model.theta, c.model.theta);
        assert_eq!(a.loss_curve, c.loss_curve);
    }

    #[test]
    fn non_finite_theta_is_rejected_up_front() {
        let tol = Tolerances::default();
        let mut model = VariationalModel::layered(1, 1, 0, 3).unwrap();
        model.theta[0] = f64::NAN;
        let data = toy_linear_dataset();
        let err = train(
            &model,
            &data,
            &TrainConfig::default(),
            Jobs::Sequential,
            &tol,
        )
        .unwrap_err();
        assert!(matches!(err, TrainError::BadConfig(_)), "{err}");
    }

    #[test]
    fn non_finite_loss_reports_divergence() {
        // Rotation-family losses are bounded, so force non-finiteness the
        // only way it can appear: through the weighted mean itself.
        let model = VariationalModel::layered(1, 1, 0, 3).unwrap();
        let prep = simulate_pure(
            EncodedInput::angle(&[0.4], 1).unwrap().circuit(),
            &[0.4],
        )
        .unwrap();
        let items = vec![PreparedItem {
            eval: PreparedEval::Pure { prep },
            label: 0,
            weight: f64::NAN,
        }];
        let mut rng = SplitMix64::new(0);
        let err = descend(
            &model,
            &items,
            model.theta.clone(),
            &TrainConfig::default(),
            &mut rng,
            Jobs::Sequential,
        )
        .unwrap_err();
        assert!(matches!(err, TrainError::Diverged { epoch: 0, .. }), "{err}");
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let tol = Tolerances::default();
        let model = VariationalModel::layered(1, 1, 0, 3).unwrap();
        let data = LabeledDataset::new("empty", vec![]);
        assert!(matches!(
            train(
                &model,
                &data,
                &TrainConfig::default(),
                Jobs::Sequential,
                &tol
            ),
            Err(TrainError::EmptyDataset { .. })
        ));
    }

    #[test]
    fn unknown_label_is_rejected() {
        let tol = Tolerances::default();
        let model = VariationalModel::layered(1, 1, 0, 3).unwrap();
        let items = vec![LabeledItem {
            item: DatasetItem::Encoded(EncodedInput::angle(&[0.3], 1).unwrap()),
            label: "mystery".into(),
        }];
        let data = LabeledDataset::new("bad-labels", items);
        assert!(matches!(
            train(
                &model,
                &data,
                &TrainConfig::default(),
                Jobs::Sequential,
                &tol
            ),
            Err(TrainError::UnknownLabel { index: 0, .. })
        ));
    }

    #[test]
    fn lcei_is_deterministic_balanced_and_thresholded() {
        let range = (-std::f64::consts::PI, std::f64::consts::PI);
        let a = generate_lcei(3, 10, range, 42).unwrap();
        let b = generate_lcei(3, 10, range, 42).unwrap();
        assert_eq!(a.items.len(), 10);
        let mut excited = 0;
        for (ia, ib) in a.items.iter().zip(&b.items) {
            assert_eq!(ia.label, ib.label);
            let fa = ia.item.encoded().unwrap().features();
            let fb = ib.item.encoded().unwrap().features();
            assert_eq!(fa, fb);
            let alpha = fa[0];
            let want = if alpha.abs() > LCEI_THRESHOLD {
                "excited"
            } else {
                "non-excited"
            };
            assert_eq!(ia.label, want);
            if ia.label == "excited" {
                excited += 1;
            }
        }
        assert_eq!(excited, 5);
    }

    #[test]
    fn lcei_alpha_zero_is_non_excited() {
        // The band draw never emits exactly 0, so check the labeling rule
        // directly at the class boundary's center.
        assert!(0.0_f64.abs() <= LCEI_THRESHOLD);
        let d = generate_lcei(2, 4, (-0.1, 0.2), 1).unwrap_err();
        // range (−0.1, 0.2) has no excited band
        assert!(matches!(d, TrainError::BadGenerator(_)));
    }

    #[test]
    fn lcei_rejects_bad_qubit_counts() {
        let range = (-std::f64::consts::PI, std::f64::consts::PI);
        assert!(generate_lcei(1, 4, range, 0).is_err());
        assert!(generate_lcei(7, 4, range, 0).is_err());
        assert!(generate_lcei(2, 4, range, 0).is_ok());
        assert!(generate_lcei(6, 4, range, 0).is_ok());
    }

    #[test]
    fn lcei_states_are_cluster_states_rotated() {
        // For n = 2: H⊗H then CZ then rx(α) on qubit 1. α = feature.
        let d = generate_lcei(2, 2, (-std::f64::consts::PI, std::f64::consts::PI), 9).unwrap();
        for li in &d.items {
            let e = li.item.encoded().unwrap();
            assert_eq!(e.circuit().gate_count(), 4);
            let rho = e.state();
            assert_eq!(rho.dim(), 4);
        }
    }

    #[test]
    fn synthetic_is_deterministic_and_balanced() {
        let a = generate_synthetic(2, 10, 7).unwrap();
        let b = generate_synthetic(2, 10, 7).unwrap();
        assert_eq!(a.items.len(), 10);
        let zeros = a.items.iter().filter(|li| li.label == "0").count();
        assert_eq!(zeros, 5);
        for (ia, ib) in a.items.iter().zip(&b.items) {
            assert_eq!(
                ia.item.encoded().unwrap().features(),
                ib.item.encoded().unwrap().features()
            );
        }
    }

    #[test]
    fn critical_samples_selects_smallest_rlb() {
        let per_item = vec![
            ItemReport {
                index: 0,
                rlb: Some(0.3),
                optimal: None,
                rub: None,
                verdict: Verdict::Robust,
                witness_ref: None,
            },
            ItemReport {
                index: 1,
                rlb: Some(0.1),
                optimal: None,
                rub: None,
                verdict: Verdict::Robust,
                witness_ref: None,
            },
            ItemReport {
                index: 2,
                rlb: None,
                optimal: None,
                rub: None,
                verdict: Verdict::SkippedMisclassified,
                witness_ref: None,
            },
            ItemReport {
                index: 3,
                rlb: Some(0.1),
                optimal: None,
                rub: None,
                verdict: Verdict::Robust,
                witness_ref: None,
            },
            ItemReport {
                index: 4,
                rlb: Some(0.2),
                optimal: None,
                rub: None,
                verdict: Verdict::Robust,
                witness_ref: None,
            },
        ];
        let report = VerificationReport {
            epsilon: 0.01,
            method: VerifyMethod::Mixed,
            per_item,
            robust_accuracy: 1.0,
            under_robust_accuracy: Some(1.0),
            adversarial_set: vec![],
            misclassified: vec![2],
            sdp_calls: 0,
            timing: Default::default(),
        };
        // ⌊0.5 · 5⌋ = 2 smallest: ties at 0.1 go to indices 1 and 3.
        assert_eq!(critical_samples(&report, 0.5), vec![1, 3]);
        // ⌊0.2 · 5⌋ = 1.
        assert_eq!(critical_samples(&report, DEFAULT_CRITICAL_FRACTION), vec![1]);
        // fraction ≥ 1 keeps only items with a bound.
        assert_eq!(critical_samples(&report, 1.0), vec![0, 1, 3, 4]);
    }

    #[test]
    fn adversarial_training_with_no_witnesses_matches_clean() {
        // A model that classifies everything perfectly with huge margins
        // still yields witnesses via attack only if the attack succeeds;
        // use a tiny attack budget so harvesting fails, and compare.
        let tol = Tolerances::default();
        let model = VariationalModel::layered(1, 1, 0, 3).unwrap();
        let data = toy_linear_dataset();
        let clean_cfg = TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        };
        let adv_cfg = TrainConfig {
            adversarial: true,
            attack_cfg: Some(AttackConfig {
                strength: 1e-12,
                max_escalations: 0,
                ..AttackConfig::default()
            }),
            ..clean_cfg.clone()
        };
        let clean = train(&model, &data, &clean_cfg, Jobs::Sequential, &tol).unwrap();
        let adv = train(&model, &data, &adv_cfg, Jobs::Sequential, &tol).unwrap();
        if adv.adversarial_added == 0 {
            assert_eq!(clean.model.theta, adv.model.theta);
            assert_eq!(clean.loss_curve, adv.loss_curve);
        }
    }

    #[test]
    fn adversarial_training_adds_witnesses_and_extends_curve() {
        let tol = Tolerances::default();
        let model = VariationalModel::layered(1, 1, 0, 3).unwrap();
        let data = toy_linear_dataset();
        let cfg = TrainConfig {
            epochs: 20,
            adversarial: true,
            ..TrainConfig::default()
        };
        let out = train(&model, &data, &cfg, Jobs::Sequential, &tol).unwrap();
        assert!(out.adversarial_added > 0, "no adversarial examples found");
        assert_eq!(out.loss_curve.len(), 2 * (cfg.epochs + 1));
    }

    #[test]
    fn raw_state_items_train_via_density_path() {
        let tol = Tolerances::default();
        let model = VariationalModel::layered(1, 1, 0, 4).unwrap();
        // Same toy task but the items are the encoded states themselves.
        let xs = [0.7, 0.9, -0.7, -0.9];
        let items: Vec<LabeledItem> = xs
            .iter()
            .map(|&x| {
                let e = EncodedInput::angle(&[x], 1).unwrap();
                LabeledItem {
                    item: DatasetItem::State(e.state().clone()),
                    label: if x > 0.0 { "0".into() } else { "1".into() },
                }
            })
            .collect();
        let data = LabeledDataset::new("raw-toy", items);
        let out = train(
            &model,
            &data,
            &TrainConfig::default(),
            Jobs::Sequential,
            &tol,
        )
        .unwrap();
        assert_eq!(out.model.accuracy(&data, &tol).unwrap(), 1.0);
    }

    #[test]
    fn raw_state_harvest_uses_fidelity_weighted_witnesses() {
        let tol = Tolerances::default();
        let model = VariationalModel::layered(1, 1, 0, 4).unwrap();
        let xs = [0.7, -0.7];
        let items: Vec<LabeledItem> = xs
            .iter()
            .map(|&x| {
                let e = EncodedInput::angle(&[x], 1).unwrap();
                LabeledItem {
                    item: DatasetItem::State(e.state().clone()),
                    label: if x > 0.0 { "0".into() } else { "1".into() },
                }
            })
            .collect();
        let data = LabeledDataset::new("raw-pair", items);
        let cfg = TrainConfig {
            epochs: 25,
            adversarial: true,
            ..TrainConfig::default()
        };
        let out = train(&model, &data, &cfg, Jobs::Sequential, &tol).unwrap();
        // Every correctly classified raw state has a minimal-distance
        // witness, so harvesting adds one per item.
        assert_eq!(out.adversarial_added, 2);
        assert_eq!(out.loss_curve.len(), 2 * (cfg.epochs + 1));
        assert!(out.loss_curve.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn lcei_povm_labels_match_generator() {
        let p = lcei_povm(3).unwrap();
        assert_eq!(p.labels(), &["non-excited", "excited"]);
        assert_eq!(p.dim(), 8);
    }
}
