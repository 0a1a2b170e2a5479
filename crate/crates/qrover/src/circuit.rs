//! Gate-level circuit intermediate representation.
//!
//! A [`CircuitIR`] is an ordered list of operations on `n_qubits` qubits:
//! unitary gates from a fixed single/two-qubit gate set, plus optional noise
//! markers (inserted programmatically, not parsed from source). Rotation
//! angles may be bound to symbolic parameter slots for differentiation and
//! training; a slot id appears at most once per circuit so the parameter-shift
//! rule applies verbatim.

use thiserror::Error;

/// Supported unitary gate kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Sdg,
    Tdg,
    Rx,
    Ry,
    Rz,
    U3,
    Cx,
    Cz,
    Id,
}

impl GateKind {
    /// Number of qubit operands.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz => 2,
            _ => 1,
        }
    }

    /// Number of angle parameters.
    pub fn n_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            GateKind::U3 => 3,
            _ => 0,
        }
    }

    /// Lower-case mnemonic, as written in circuit source text.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Sdg => "sdg",
            GateKind::Tdg => "tdg",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::U3 => "u3",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Id => "id",
        }
    }

    /// Parse a mnemonic.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "h" => GateKind::H,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "s" => GateKind::S,
            "t" => GateKind::T,
            "sdg" => GateKind::Sdg,
            "tdg" => GateKind::Tdg,
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "u3" => GateKind::U3,
            "cx" => GateKind::Cx,
            "cz" => GateKind::Cz,
            "id" => GateKind::Id,
            _ => return None,
        })
    }

    /// Whether the parameter-shift rule applies to this gate's single angle.
    pub fn is_shiftable_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }
}

/// A single unitary gate application.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    /// Qubit operands; for `cx`/`cz` the first entry is the control.
    pub qubits: Vec<usize>,
    /// Angle parameters (radians), one per parameter position.
    pub params: Vec<f64>,
    /// Optional symbolic slot per parameter position; a slot id binds the
    /// angle to an external parameter vector and must be unique circuit-wide.
    pub param_slots: Vec<Option<u32>>,
}

impl GateOp {
    /// Gate with literal parameters and no symbolic slots.
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Self {
        let slots = vec![None; params.len()];
        GateOp {
            kind,
            qubits,
            params,
            param_slots: slots,
        }
    }

    /// Single-qubit parameterless gate.
    pub fn simple(kind: GateKind, qubit: usize) -> Self {
        GateOp::new(kind, vec![qubit], vec![])
    }

    /// Single-qubit rotation with a literal angle.
    pub fn rotation(kind: GateKind, qubit: usize, angle: f64) -> Self {
        GateOp::new(kind, vec![qubit], vec![angle])
    }

    /// Single-qubit rotation bound to parameter slot `slot` (the stored
    /// angle is a default used when no binding vector is supplied).
    pub fn rotation_slot(kind: GateKind, qubit: usize, angle: f64, slot: u32) -> Self {
        GateOp {
            kind,
            qubits: vec![qubit],
            params: vec![angle],
            param_slots: vec![Some(slot)],
        }
    }

    /// Angle parameters with symbolic slots resolved from `values`
    /// (`values[slot]`); literal parameters pass through.
    pub fn resolved_params(&self, values: &[f64]) -> Vec<f64> {
        self.params
            .iter()
            .zip(self.param_slots.iter())
            .map(|(&p, slot)| match slot {
                Some(s) => values[*s as usize],
                None => p,
            })
            .collect()
    }
}

/// Standard single-qubit noise kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    BitFlip,
    PhaseFlip,
    Depolarizing,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::BitFlip => "bit_flip",
            NoiseKind::PhaseFlip => "phase_flip",
            NoiseKind::Depolarizing => "depolarizing",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "bit_flip" => NoiseKind::BitFlip,
            "phase_flip" => NoiseKind::PhaseFlip,
            "depolarizing" => NoiseKind::Depolarizing,
            _ => return None,
        })
    }

    /// All standard kinds, in the order used for uniform random selection.
    pub const ALL: [NoiseKind; 3] = [
        NoiseKind::BitFlip,
        NoiseKind::PhaseFlip,
        NoiseKind::Depolarizing,
    ];
}

/// A noise marker attached to one qubit at a fixed position in the op list.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseOp {
    pub kind: NoiseKind,
    pub qubit: usize,
    /// Error probability in `(0, 1]`.
    pub p: f64,
}

/// One entry in a circuit's op list.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitOp {
    Gate(GateOp),
    Noise(NoiseOp),
}

/// Errors from circuit construction and validation.
#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("circuit must have at least one qubit")]
    NoQubits,
    #[error("op {index}: qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange {
        index: usize,
        qubit: usize,
        n_qubits: usize,
    },
    #[error("op {index}: gate {gate} expects {expected} qubit operand(s), got {got}")]
    ArityMismatch {
        index: usize,
        gate: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("op {index}: gate {gate} expects {expected} parameter(s), got {got}")]
    ParamCountMismatch {
        index: usize,
        gate: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("op {index}: duplicate qubit operand {qubit}")]
    DuplicateQubit { index: usize, qubit: usize },
    #[error("op {index}: parameter slot {slot} used more than once in the circuit")]
    DuplicateSlot { index: usize, slot: u32 },
    #[error("op {index}: non-finite parameter")]
    NonFiniteParam { index: usize },
    #[error("op {index}: noise probability {p} outside (0, 1]")]
    BadNoiseProbability { index: usize, p: f64 },
    #[error("measured qubit {qubit} out of range for {n_qubits} qubits")]
    MeasureOutOfRange { qubit: usize, n_qubits: usize },
}

/// A gate-level circuit on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitIR {
    pub n_qubits: usize,
    pub ops: Vec<CircuitOp>,
    /// Qubits with `measure` statements, in program order (deduplicated).
    pub measured_qubits: Vec<usize>,
}

impl CircuitIR {
    /// Empty circuit on `n_qubits` qubits.
    pub fn empty(n_qubits: usize) -> Self {
        CircuitIR {
            n_qubits,
            ops: Vec::new(),
            measured_qubits: Vec::new(),
        }
    }

    /// Append a gate.
    pub fn push_gate(&mut self, gate: GateOp) {
        self.ops.push(CircuitOp::Gate(gate));
    }

    /// Append a noise marker.
    pub fn push_noise(&mut self, noise: NoiseOp) {
        self.ops.push(CircuitOp::Noise(noise));
    }

    /// Hilbert-space dimension `2^n`.
    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    /// Iterate over the unitary gates only (noise markers skipped).
    pub fn gates(&self) -> impl Iterator<Item = &GateOp> {
        self.ops.iter().filter_map(|op| match op {
            CircuitOp::Gate(g) => Some(g),
            CircuitOp::Noise(_) => None,
        })
    }

    /// Number of unitary gates.
    pub fn gate_count(&self) -> usize {
        self.gates().count()
    }

    /// Whether the circuit contains any noise markers.
    pub fn has_noise(&self) -> bool {
        self.ops.iter().any(|op| matches!(op, CircuitOp::Noise(_)))
    }

    /// Largest slot id plus one (the length a binding vector must have),
    /// or 0 when no slots are used.
    pub fn slot_count(&self) -> usize {
        self.gates()
            .flat_map(|g| g.param_slots.iter().flatten())
            .map(|&s| s as usize + 1)
            .max()
            .unwrap_or(0)
    }

    /// Structural validation of every invariant listed on the type.
    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.n_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        let mut seen_slots = std::collections::HashSet::new();
        for (index, op) in self.ops.iter().enumerate() {
            match op {
                CircuitOp::Gate(g) => {
                    if g.qubits.len() != g.kind.arity() {
                        return Err(CircuitError::ArityMismatch {
                            index,
                            gate: g.kind.name(),
                            expected: g.kind.arity(),
                            got: g.qubits.len(),
                        });
                    }
                    if g.params.len() != g.kind.n_params()
                        || g.param_slots.len() != g.params.len()
                    {
                        return Err(CircuitError::ParamCountMismatch {
                            index,
                            gate: g.kind.name(),
                            expected: g.kind.n_params(),
                            got: g.params.len(),
                        });
                    }
                    for &q in &g.qubits {
                        if q >= self.n_qubits {
                            return Err(CircuitError::QubitOutOfRange {
                                index,
                                qubit: q,
                                n_qubits: self.n_qubits,
                            });
                        }
                    }
                    if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
                        return Err(CircuitError::DuplicateQubit {
                            index,
                            qubit: g.qubits[0],
                        });
                    }
                    for p in &g.params {
                        if !p.is_finite() {
                            return Err(CircuitError::NonFiniteParam { index });
                        }
                    }
                    for slot in g.param_slots.iter().flatten() {
                        if !seen_slots.insert(*slot) {
                            return Err(CircuitError::DuplicateSlot { index, slot: *slot });
                        }
                    }
                }
                CircuitOp::Noise(noise) => {
                    if noise.qubit >= self.n_qubits {
                        return Err(CircuitError::QubitOutOfRange {
                            index,
                            qubit: noise.qubit,
                            n_qubits: self.n_qubits,
                        });
                    }
                    if !(noise.p > 0.0 && noise.p <= 1.0) {
                        return Err(CircuitError::BadNoiseProbability {
                            index,
                            p: noise.p,
                        });
                    }
                }
            }
        }
        for &q in &self.measured_qubits {
            if q >= self.n_qubits {
                return Err(CircuitError::MeasureOutOfRange {
                    qubit: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        Ok(())
    }

    /// Resolve every parameter slot against `values`, producing a circuit
    /// with only literal parameters (no slots). Slot ids must all be below
    /// `values.len()`.
    pub fn bind(&self, values: &[f64]) -> CircuitIR {
        let mut ops = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            match op {
                CircuitOp::Gate(g) => {
                    let mut g = g.clone();
                    g.params = g.resolved_params(values);
                    g.param_slots = vec![None; g.params.len()];
                    ops.push(CircuitOp::Gate(g));
                }
                CircuitOp::Noise(n) => ops.push(CircuitOp::Noise(n.clone())),
            }
        }
        CircuitIR {
            n_qubits: self.n_qubits,
            ops,
            measured_qubits: self.measured_qubits.clone(),
        }
    }

    /// Concatenate `other` after `self`, shifting every slot id in `other`
    /// by `slot_offset`. Qubit counts must match; measured qubits are taken
    /// from `other` if it declares any, else kept from `self`.
    pub fn concat(&self, other: &CircuitIR, slot_offset: u32) -> CircuitIR {
        assert_eq!(self.n_qubits, other.n_qubits, "qubit count mismatch");
        let mut ops = self.ops.clone();
        for op in &other.ops {
            match op {
                CircuitOp::Gate(g) => {
                    let mut g = g.clone();
                    for slot in g.param_slots.iter_mut() {
                        if let Some(s) = slot {
                            *s += slot_offset;
                        }
                    }
                    ops.push(CircuitOp::Gate(g));
                }
                CircuitOp::Noise(n) => ops.push(CircuitOp::Noise(n.clone())),
            }
        }
        let measured = if other.measured_qubits.is_empty() {
            self.measured_qubits.clone()
        } else {
            other.measured_qubits.clone()
        };
        CircuitIR {
            n_qubits: self.n_qubits,
            ops,
            measured_qubits: measured,
        }
    }

    /// Indices into `ops` of the gates acting on qubit `q`, in program order.
    /// Noise markers are not part of the timeline.
    pub fn gate_positions_on_qubit(&self, q: usize) -> Vec<usize> {
        self.ops
            .iter()
            .enumerate()
            .filter_map(|(i, op)| match op {
                CircuitOp::Gate(g) if g.qubits.contains(&q) => Some(i),
                _ => None,
            })
            .collect()
    }
}
