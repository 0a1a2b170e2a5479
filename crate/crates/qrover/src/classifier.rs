//! The verification subject: a noisy channel, a POVM, and class labels.
//!
//! A [`Classifier`] `A = (E, {M_c})` sends a density matrix through the
//! channel `E` and measures the POVM `{M_c}`; the predicted class is the
//! most probable outcome. Outcome probabilities are evaluated in the
//! Heisenberg picture via the precomputed effects `E†(M_c)`, which equals
//! `Tr[M_c · E(ρ)]` by the adjoint identity.

use crate::channel::{compile_channel, compile_kraus, ChannelError, KrausChannel, NoiseSpec, SuperOp};
use crate::channel::MAX_SUPEROP_QUBITS;
use crate::circuit::CircuitIR;
use crate::linalg::{
    hermitian_eig, hermitize, identity, max_abs_diff, trace, CMatrix, LinalgError,
};
use crate::state::DensityMatrix;
use crate::tol::Tolerances;
use thiserror::Error;

/// Errors from POVM validation and classification.
#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("POVM invalid: {0}")]
    BadPovm(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("outcome distribution sums to {sum}, deviating from 1 beyond tolerance")]
    DistributionInvalid { sum: f64 },
    #[error("expectation value {z} outside [-1, 1]")]
    OutOfRange { z: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// A positive operator-valued measure with ordered class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    labels: Vec<String>,
    elements: Vec<CMatrix>,
    dim: usize,
}

impl Povm {
    /// Validate and build: every element Hermitian PSD (within `tol.psd`)
    /// and `‖Σ M_c − I‖_max ≤ tol.completeness`.
    pub fn new(
        labels: Vec<String>,
        elements: Vec<CMatrix>,
        tol: &Tolerances,
    ) -> Result<Self, ClassifierError> {
        if labels.len() != elements.len() {
            return Err(ClassifierError::BadPovm(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        if elements.len() < 2 {
            return Err(ClassifierError::BadPovm(
                "a classifier needs at least two outcomes".into(),
            ));
        }
        let dim = elements[0].nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for (c, m) in elements.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(ClassifierError::BadPovm(format!(
                    "element {c} has shape {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let (values, _) = hermitian_eig(m, tol).map_err(|e| {
                ClassifierError::BadPovm(format!("element {c} is not Hermitian: {e}"))
            })?;
            if let Some(&min) = values.last() {
                if min < -tol.psd {
                    return Err(ClassifierError::BadPovm(format!(
                        "element {c} has negative eigenvalue {min:.3e}"
                    )));
                }
            }
            sum += m;
        }
        let deviation = max_abs_diff(&sum, &identity(dim));
        if deviation > tol.completeness {
            return Err(ClassifierError::BadPovm(format!(
                "completeness violated: ‖Σ M_c − I‖_max = {deviation:.3e}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(ClassifierError::BadPovm(format!("duplicate label `{l}`")));
            }
        }
        Ok(Povm {
            labels,
            elements,
            dim,
        })
    }

    /// Two-outcome Z-basis POVM `{|0⟩⟨0|, |1⟩⟨1|}` on a single qubit.
    pub fn z_basis() -> Self {
        Povm::measurement(1, &[0]).expect("static construction")
    }

    /// Z-basis POVM on one designated qubit of an `n_qubits` register.
    pub fn z_basis_on(n_qubits: usize, qubit: usize) -> Self {
        Povm::measurement(n_qubits, &[qubit]).expect("valid measured qubit")
    }

    /// Full computational-basis POVM on `n_qubits` (labels `"0"…"N−1"`).
    pub fn computational_basis(n_qubits: usize) -> Self {
        let all: Vec<usize> = (0..n_qubits).collect();
        Povm::measurement(n_qubits, &all).expect("static construction")
    }

    /// Projective POVM for measuring the listed qubits of an `n_qubits`
    /// register in the computational basis. Outcome `o` collects the basis
    /// projectors whose bits at the measured positions spell `o` (measured
    /// qubits in the given order, first qubit = least significant bit).
    pub fn measurement(n_qubits: usize, measured: &[usize]) -> Result<Self, ClassifierError> {
        if measured.is_empty() {
            return Err(ClassifierError::BadPovm(
                "measurement needs at least one qubit".into(),
            ));
        }
        for &q in measured {
            if q >= n_qubits {
                return Err(ClassifierError::DimensionMismatch(format!(
                    "measured qubit {q} out of range for {n_qubits} qubits"
                )));
            }
        }
        let dim = 1usize << n_qubits;
        let n_outcomes = 1usize << measured.len();
        let mut elements = vec![CMatrix::zeros(dim, dim); n_outcomes];
        for k in 0..dim {
            let mut outcome = 0usize;
            for (bit, &q) in measured.iter().enumerate() {
                if (k >> q) & 1 == 1 {
                    outcome |= 1 << bit;
                }
            }
            elements[outcome][(k, k)] += 1.0;
        }
        let labels = (0..n_outcomes).map(|o| o.to_string()).collect();
        Povm::new(labels, elements, &Tolerances::default())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Number of outcomes/classes.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of a label, if present.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A quantum classifier: channel + POVM + labels.
#[derive(Debug, Clone)]
pub struct Classifier {
    kraus: KrausChannel,
    superop: Option<SuperOp>,
    povm: Povm,
    n_qubits: usize,
    /// Heisenberg-picture effects `E†(M_c)`, precomputed once.
    heisenberg_povm: Vec<CMatrix>,
}

impl Classifier {
    /// Build from a compiled channel and a POVM; dimensions must agree.
    pub fn new(
        kraus: KrausChannel,
        superop: Option<SuperOp>,
        povm: Povm,
        _tol: &Tolerances,
    ) -> Result<Self, ClassifierError> {
        let dim = kraus.dim();
        if povm.dim() != dim {
            return Err(ClassifierError::DimensionMismatch(format!(
                "channel dimension {dim} vs POVM dimension {}",
                povm.dim()
            )));
        }
        if let Some(s) = &superop {
            if s.dim() != dim {
                return Err(ClassifierError::DimensionMismatch(format!(
                    "channel dimension {dim} vs superoperator dimension {}",
                    s.dim()
                )));
            }
        }
        if !dim.is_power_of_two() {
            return Err(ClassifierError::DimensionMismatch(format!(
                "dimension {dim} is not a power of two"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        let heisenberg_povm = povm
            .elements()
            .iter()
            .map(|m| hermitize(&kraus.adjoint_apply(m)))
            .collect();
        Ok(Classifier {
            kraus,
            superop,
            povm,
            n_qubits,
            heisenberg_povm,
        })
    }

    /// Compile a circuit (with optional noise) and pair it with a POVM.
    /// The dense superoperator is materialized for circuits of at most
    /// [`MAX_SUPEROP_QUBITS`] qubits.
    pub fn from_circuit(
        circ: &CircuitIR,
        noise: Option<&NoiseSpec>,
        povm: Povm,
        tol: &Tolerances,
    ) -> Result<Self, ClassifierError> {
        if circ.n_qubits <= MAX_SUPEROP_QUBITS {
            let (kraus, superop) = compile_channel(circ, noise, tol)?;
            Classifier::new(kraus, Some(superop), povm, tol)
        } else {
            let kraus = compile_kraus(circ, noise, tol)?;
            Classifier::new(kraus, None, povm, tol)
        }
    }

    pub fn kraus(&self) -> &KrausChannel {
        &self.kraus
    }

    pub fn superop(&self) -> Option<&SuperOp> {
        self.superop.as_ref()
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.kraus.dim()
    }

    /// Number of classes.
    pub fn n_classes(&self) -> usize {
        self.povm.len()
    }

    pub fn labels(&self) -> &[String] {
        self.povm.labels()
    }

    /// The precomputed Heisenberg effects `E†(M_c)`.
    pub fn heisenberg_povm(&self) -> &[CMatrix] {
        &self.heisenberg_povm
    }

    /// Outcome probabilities `p_c = Tr[M_c · E(ρ)]`, clamped to `[0,1]` and
    /// renormalized when the sum deviates from 1 by at most
    /// `tol.distribution` (an error beyond that).
    pub fn outcome_distribution(
        &self,
        rho: &DensityMatrix,
        tol: &Tolerances,
    ) -> Result<Vec<f64>, ClassifierError> {
        if rho.dim() != self.dim() {
            return Err(ClassifierError::DimensionMismatch(format!(
                "state dimension {} vs classifier dimension {}",
                rho.dim(),
                self.dim()
            )));
        }
        let mut probs: Vec<f64> = self
            .heisenberg_povm
            .iter()
            .map(|a| trace(&(a * rho.matrix())).re.clamp(0.0, 1.0))
            .collect();
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol.distribution {
            return Err(ClassifierError::DistributionInvalid { sum });
        }
        if sum > 0.0 {
            for p in probs.iter_mut() {
                *p /= sum;
            }
        }
        Ok(probs)
    }

    /// The most probable outcome's label index; ties broken by the
    /// smallest label index.
    pub fn classify(
        &self,
        rho: &DensityMatrix,
        tol: &Tolerances,
    ) -> Result<usize, ClassifierError> {
        let probs = self.outcome_distribution(rho, tol)?;
        Ok(argmax_tie_smallest(&probs))
    }
}

/// Argmax with ties resolved to the smallest index.
pub fn argmax_tie_smallest(probs: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Convert a Pauli-Z expectation value in `[−1, 1]` to the probability of
/// the `0` outcome: `p = (z + 1) / 2`.
pub fn expectation_to_probability(z_expect: f64) -> Result<f64, ClassifierError> {
    if !z_expect.is_finite() || !(-1.0..=1.0).contains(&z_expect) {
        return Err(ClassifierError::OutOfRange { z: z_expect });
    }
    Ok((z_expect + 1.0) / 2.0)
}
