//! CPTP channels: Kraus form, dense superoperator, noise models, and
//! circuit compilation.
//!
//! A circuit (optionally with noise markers, or with a [`NoiseSpec`]
//! describing end-of-circuit or random noise placement) compiles to a
//! [`KrausChannel`] together with its dense [`SuperOp`]. Vectorization is
//! column-major (`vec` stacks columns), under which a single Kraus operator
//! `K` acts on `vec(ρ)` as `K̄ ⊗ K`.

use crate::circuit::{CircuitIR, CircuitOp, NoiseKind, NoiseOp};
use crate::linalg::{
    c, cr, hermitian_eig, hermitize, identity, kron, max_abs_diff, unvec_col_major, vec_col_major,
    CMatrix, LinalgError, C_ONE, C_ZERO,
};
use crate::rng::SplitMix64;
use crate::sim::lift_gate;
use crate::state::{DensityMatrix, StateError};
use crate::tol::Tolerances;
use thiserror::Error;

/// Max qubit count for Kraus-form compilation.
pub const MAX_KRAUS_QUBITS: usize = 10;
/// Max qubit count when the dense superoperator is also materialized.
pub const MAX_SUPEROP_QUBITS: usize = 6;

/// Choi eigenvalues at or below this are discarded during Kraus reduction.
const CHOI_CUTOFF: f64 = 1e-13;

/// Errors from channel construction and compilation.
#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("circuit too large: {n_qubits} qubits exceeds the {limit}-qubit limit for {form}")]
    TooLarge {
        n_qubits: usize,
        limit: usize,
        form: &'static str,
    },
    #[error("invalid noise: {0}")]
    InvalidNoise(String),
    #[error("noise probability {p} outside [0,1]")]
    BadProbability { p: f64 },
    #[error("Kraus completeness violated: ‖Σ K†K − I‖_max = {deviation:.3e}")]
    NotTracePreserving { deviation: f64 },
    #[error("Kraus operator {index} has shape {rows}x{cols}, expected {dim}x{dim}")]
    BadKrausShape {
        index: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("internal cross-check failed: Kraus and SuperOp actions differ by {deviation:.3e}")]
    Inconsistent { deviation: f64 },
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// A completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    /// The identity channel on an `N`-dimensional space.
    pub fn identity_channel(dim: usize) -> Self {
        KrausChannel {
            dim,
            ops: vec![identity(dim)],
        }
    }

    /// Single-Kraus channel `ρ ↦ U ρ U†`.
    pub fn from_unitary(u: CMatrix) -> Self {
        let dim = u.nrows();
        KrausChannel { dim, ops: vec![u] }
    }

    /// Build from explicit Kraus operators, validating shapes, the count
    /// bound (`≤ N²`), and completeness within `tol.completeness`.
    pub fn new(dim: usize, ops: Vec<CMatrix>, tol: &Tolerances) -> Result<Self, ChannelError> {
        let ch = KrausChannel { dim, ops };
        ch.validate(tol)?;
        Ok(ch)
    }

    /// Hilbert-space dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The Kraus operators.
    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// `‖Σ K†K − I‖_max`.
    pub fn completeness_deviation(&self) -> f64 {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            acc += k.adjoint() * k;
        }
        max_abs_diff(&acc, &identity(self.dim))
    }

    /// Validate shapes, count bound, and completeness.
    pub fn validate(&self, tol: &Tolerances) -> Result<(), ChannelError> {
        for (index, k) in self.ops.iter().enumerate() {
            if k.nrows() != self.dim || k.ncols() != self.dim {
                return Err(ChannelError::BadKrausShape {
                    index,
                    rows: k.nrows(),
                    cols: k.ncols(),
                    dim: self.dim,
                });
            }
        }
        if self.ops.len() > self.dim * self.dim {
            return Err(ChannelError::InvalidNoise(format!(
                "{} Kraus operators exceed the N² = {} bound",
                self.ops.len(),
                self.dim * self.dim
            )));
        }
        let deviation = self.completeness_deviation();
        if deviation > tol.completeness {
            return Err(ChannelError::NotTracePreserving { deviation });
        }
        Ok(())
    }

    /// Schrödinger-picture action `E(m) = Σ K m K†` on a raw matrix.
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out += k * m * k.adjoint();
        }
        out
    }

    /// Apply to a density matrix, revalidating the output.
    pub fn apply(&self, rho: &DensityMatrix, tol: &Tolerances) -> Result<DensityMatrix, ChannelError> {
        let out = hermitize(&self.apply_matrix(rho.matrix()));
        Ok(DensityMatrix::new(out, tol)?)
    }

    /// Heisenberg-picture (adjoint) action `E†(M) = Σ K† M K`.
    ///
    /// Satisfies `Tr[M · E(ρ)] = Tr[E†(M) · ρ]`.
    pub fn adjoint_apply(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out += k.adjoint() * m * k;
        }
        out
    }

    /// Composition `after ∘ before` (apply `before` first). The pairwise
    /// Kraus products are reduced through the Choi form whenever the count
    /// would exceed `N²`.
    pub fn compose(after: &Self, before: &Self, tol: &Tolerances) -> Result<Self, ChannelError> {
        debug_assert_eq!(after.dim, before.dim);
        let mut ops = Vec::with_capacity(after.ops.len() * before.ops.len());
        for a in &after.ops {
            for b in &before.ops {
                ops.push(a * b);
            }
        }
        let ch = KrausChannel {
            dim: after.dim,
            ops,
        };
        if ch.ops.len() > ch.dim * ch.dim {
            ch.reduced(tol)
        } else {
            Ok(ch)
        }
    }

    /// Left-multiply every Kraus operator by a unitary (composing a unitary
    /// after this channel without changing the operator count).
    fn compose_unitary_after(&mut self, u: &CMatrix) {
        for k in self.ops.iter_mut() {
            *k = u * &*k;
        }
    }

    /// Canonical minimal Kraus form via the Choi matrix: eigendecompose
    /// `J = Σ vec(K) vec(K)†` and keep eigenpairs with `λ > cutoff`. The
    /// result has at most `N²` operators and identical action.
    pub fn reduced(&self, tol: &Tolerances) -> Result<Self, ChannelError> {
        let n = self.dim;
        let nn = n * n;
        let mut choi = CMatrix::zeros(nn, nn);
        for k in &self.ops {
            let v = vec_col_major(k);
            choi += &v * v.adjoint();
        }
        let choi = hermitize(&choi);
        // The Choi matrix of a CP map is PSD; relax the reconstruction gate
        // proportionally to its trace (≈ N).
        let (values, vectors) = hermitian_eig(&choi, tol)?;
        let mut ops = Vec::new();
        for (i, &lam) in values.iter().enumerate() {
            if lam > CHOI_CUTOFF {
                let w = vectors.column(i) * cr(lam.sqrt());
                ops.push(unvec_col_major(&w.clone_owned(), n));
            }
        }
        if ops.is_empty() {
            return Err(ChannelError::InvalidNoise(
                "channel reduced to zero Kraus operators".into(),
            ));
        }
        Ok(KrausChannel { dim: n, ops })
    }

    /// Lift a single-qubit channel to act on qubit `qubit` of an `n_qubits`
    /// register (little-endian: `I ⊗ … ⊗ K ⊗ … ⊗ I`).
    pub fn lift_to(&self, n_qubits: usize, qubit: usize) -> Self {
        debug_assert_eq!(self.dim, 2, "lift_to expects a single-qubit channel");
        debug_assert!(qubit < n_qubits);
        let left = identity(1usize << (n_qubits - 1 - qubit));
        let right = identity(1usize << qubit);
        let ops = self
            .ops
            .iter()
            .map(|k| kron(&left, &kron(k, &right)))
            .collect();
        KrausChannel {
            dim: 1usize << n_qubits,
            ops,
        }
    }

    /// Dense superoperator `S = Σ_K K̄ ⊗ K` acting on column-vectorized
    /// matrices: `vec(E(ρ)) = S vec(ρ)`.
    pub fn superop(&self) -> SuperOp {
        let nn = self.dim * self.dim;
        let mut mat = CMatrix::zeros(nn, nn);
        for k in &self.ops {
            let conj = k.map(|z| z.conj());
            mat += kron(&conj, k);
        }
        SuperOp {
            dim: self.dim,
            mat,
        }
    }
}

/// Dense superoperator acting on column-vectorized density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    dim: usize,
    mat: CMatrix,
}

impl SuperOp {
    /// Hilbert-space dimension `N` (the matrix is `N² × N²`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `N² × N²` matrix.
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Action on a raw matrix: `unvec(S · vec(m))`.
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let v = vec_col_major(m);
        let out = &self.mat * v;
        unvec_col_major(&out, self.dim)
    }

    /// Apply to a density matrix, revalidating the output.
    pub fn apply(&self, rho: &DensityMatrix, tol: &Tolerances) -> Result<DensityMatrix, ChannelError> {
        let out = hermitize(&self.apply_matrix(rho.matrix()));
        Ok(DensityMatrix::new(out, tol)?)
    }
}

/// Named noise kind in a [`NoiseSpec`]: one of the standard single-qubit
/// channels or a user-supplied Kraus list.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpecKind {
    Standard(NoiseKind),
    Custom,
}

/// Where noise is applied relative to the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoisePlacement {
    /// The chosen channel is applied to every qubit after the last gate.
    End,
    /// One noise op per qubit, of random kind, at a random gate boundary,
    /// with probability drawn from `(0, p]` — all derived from `seed`.
    Random,
}

/// Declarative noise description attached to a model.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseSpecKind,
    /// Error probability; in `Random` placement this is the upper bound
    /// `p_max` of the per-qubit sample.
    pub p: f64,
    /// Kraus operators for `NoiseSpecKind::Custom` (dimension 2 to act on
    /// each qubit, or the full circuit dimension to act once at the end).
    pub custom_kraus: Option<Vec<CMatrix>>,
    pub placement: NoisePlacement,
    /// Seed for `Random` placement.
    pub seed: u64,
}

impl NoiseSpec {
    /// Standard noise at the end of the circuit.
    pub fn standard_end(kind: NoiseKind, p: f64) -> Self {
        NoiseSpec {
            kind: NoiseSpecKind::Standard(kind),
            p,
            custom_kraus: None,
            placement: NoisePlacement::End,
            seed: 0,
        }
    }

    /// Random per-qubit noise with probabilities in `(0, p_max]`.
    pub fn random(p_max: f64, seed: u64) -> Self {
        NoiseSpec {
            // The kind field is not consulted in random placement (kinds are
            // sampled per qubit); keep a fixed value for round-tripping.
            kind: NoiseSpecKind::Standard(NoiseKind::Depolarizing),
            p: p_max,
            custom_kraus: None,
            placement: NoisePlacement::Random,
            seed,
        }
    }

    /// Check probability range and (for custom noise) the Kraus list.
    pub fn validate(&self, tol: &Tolerances) -> Result<(), ChannelError> {
        if !(0.0..=1.0).contains(&self.p) || !self.p.is_finite() {
            return Err(ChannelError::BadProbability { p: self.p });
        }
        match (&self.kind, &self.custom_kraus) {
            (NoiseSpecKind::Custom, Some(kraus)) => {
                if kraus.is_empty() {
                    return Err(ChannelError::InvalidNoise(
                        "custom noise requires at least one Kraus operator".into(),
                    ));
                }
                let dim = kraus[0].nrows();
                KrausChannel::new(dim, kraus.clone(), tol)?;
                if self.placement == NoisePlacement::Random {
                    return Err(ChannelError::InvalidNoise(
                        "random placement supports the standard noise kinds only".into(),
                    ));
                }
                Ok(())
            }
            (NoiseSpecKind::Custom, None) => Err(ChannelError::InvalidNoise(
                "custom noise requires a Kraus operator list".into(),
            )),
            (NoiseSpecKind::Standard(_), _) => Ok(()),
        }
    }
}

/// The named single-qubit noise channel lifted to `n_qubits` acting on
/// `qubit`.
///
/// Kraus conventions: `bit_flip = {√(1−p)·I, √p·X}`, `phase_flip =
/// {√(1−p)·I, √p·Z}`, `depolarizing = {√(1−3p/4)·I, √(p/4)·X, √(p/4)·Y,
/// √(p/4)·Z}` (equivalently `ρ ↦ (1−p)ρ + p·I/2`).
pub fn standard_noise(
    kind: NoiseKind,
    p: f64,
    qubit: usize,
    n_qubits: usize,
) -> Result<KrausChannel, ChannelError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(ChannelError::BadProbability { p });
    }
    let x = CMatrix::from_row_slice(2, 2, &[C_ZERO, C_ONE, C_ONE, C_ZERO]);
    let y = CMatrix::from_row_slice(2, 2, &[C_ZERO, c(0.0, -1.0), c(0.0, 1.0), C_ZERO]);
    let z = CMatrix::from_row_slice(2, 2, &[C_ONE, C_ZERO, C_ZERO, cr(-1.0)]);
    let i2 = identity(2);
    let ops: Vec<CMatrix> = match kind {
        NoiseKind::BitFlip => vec![&i2 * cr((1.0 - p).sqrt()), &x * cr(p.sqrt())],
        NoiseKind::PhaseFlip => vec![&i2 * cr((1.0 - p).sqrt()), &z * cr(p.sqrt())],
        NoiseKind::Depolarizing => vec![
            &i2 * cr((1.0 - 3.0 * p / 4.0).sqrt()),
            &x * cr((p / 4.0).sqrt()),
            &y * cr((p / 4.0).sqrt()),
            &z * cr((p / 4.0).sqrt()),
        ],
    };
    let single = KrausChannel { dim: 2, ops };
    Ok(if n_qubits == 1 && qubit == 0 {
        single
    } else {
        single.lift_to(n_qubits, qubit)
    })
}

/// Insert one random noise marker per qubit into the circuit.
///
/// For each qubit in ascending index order, three PRNG draws are consumed in
/// the fixed order *(kind, position, probability)*:
///
/// 1. kind — uniform over `{bit_flip, phase_flip, depolarizing}`;
/// 2. position — uniform over the `g+1` gate boundaries of that qubit's
///    timeline (before each of its `g` gates, or after the last; a qubit
///    with no gates has a single boundary at the circuit start);
/// 3. probability — uniform in `(0, p_max]`.
///
/// Deterministic given `seed`. Markers landing on the same boundary are
/// ordered by qubit index.
pub fn inject_random_noise(
    circ: &CircuitIR,
    seed: u64,
    p_max: f64,
) -> Result<CircuitIR, ChannelError> {
    if !(p_max > 0.0 && p_max <= 1.0) {
        return Err(ChannelError::BadProbability { p: p_max });
    }
    circ.validate()?;
    let mut rng = SplitMix64::new(seed);
    // (anchor op index, before flag) → markers; None anchor = circuit start.
    struct Pending {
        anchor: Option<usize>,
        before: bool,
        op: NoiseOp,
    }
    let mut pending: Vec<Pending> = Vec::new();
    for qubit in 0..circ.n_qubits {
        let kind = NoiseKind::ALL[rng.next_index(NoiseKind::ALL.len())];
        let timeline = circ.gate_positions_on_qubit(qubit);
        let boundary = rng.next_index(timeline.len() + 1);
        let p = rng.next_f64_open_closed(p_max);
        let op = NoiseOp { kind, qubit, p };
        if timeline.is_empty() {
            pending.push(Pending {
                anchor: None,
                before: true,
                op,
            });
        } else if boundary < timeline.len() {
            pending.push(Pending {
                anchor: Some(timeline[boundary]),
                before: true,
                op,
            });
        } else {
            pending.push(Pending {
                anchor: Some(*timeline.last().expect("non-empty timeline")),
                before: false,
                op,
            });
        }
    }
    let mut out = CircuitIR::empty(circ.n_qubits);
    out.measured_qubits = circ.measured_qubits.clone();
    // Circuit-start markers first, in qubit order (pending is already in
    // ascending qubit order).
    for p in pending.iter().filter(|p| p.anchor.is_none()) {
        out.push_noise(p.op.clone());
    }
    for (i, op) in circ.ops.iter().enumerate() {
        for p in pending
            .iter()
            .filter(|p| p.anchor == Some(i) && p.before)
        {
            out.push_noise(p.op.clone());
        }
        out.ops.push(op.clone());
        for p in pending
            .iter()
            .filter(|p| p.anchor == Some(i) && !p.before)
        {
            out.push_noise(p.op.clone());
        }
    }
    Ok(out)
}

/// Compile a circuit (with optional noise) to Kraus form only.
///
/// Admits up to [`MAX_KRAUS_QUBITS`] qubits. Gates are lifted to the full
/// dimension and composed in program order; noise markers are expanded
/// in-line; a `NoiseSpec` adds end-of-circuit noise on every qubit or random
/// per-qubit noise (via [`inject_random_noise`]) before compilation.
pub fn compile_kraus(
    circ: &CircuitIR,
    noise: Option<&NoiseSpec>,
    tol: &Tolerances,
) -> Result<KrausChannel, ChannelError> {
    circ.validate()?;
    if circ.n_qubits > MAX_KRAUS_QUBITS {
        return Err(ChannelError::TooLarge {
            n_qubits: circ.n_qubits,
            limit: MAX_KRAUS_QUBITS,
            form: "Kraus",
        });
    }
    if let Some(spec) = noise {
        spec.validate(tol)?;
    }
    // Expand a random-placement NoiseSpec into in-line markers.
    let expanded;
    let circ = match noise {
        Some(spec) if spec.placement == NoisePlacement::Random => {
            expanded = inject_random_noise(circ, spec.seed, spec.p)?;
            &expanded
        }
        _ => circ,
    };

    let n = circ.n_qubits;
    let dim = circ.dim();
    let mut channel = KrausChannel::identity_channel(dim);
    // Accumulate consecutive gates into one pending unitary so each noise
    // marker costs a single flush instead of per-gate Kraus updates.
    let mut pending_u: Option<CMatrix> = None;
    let flush = |channel: &mut KrausChannel, pending: &mut Option<CMatrix>| {
        if let Some(u) = pending.take() {
            channel.compose_unitary_after(&u);
        }
    };
    for op in &circ.ops {
        match op {
            CircuitOp::Gate(g) => {
                let params = g.resolved_params(&[]);
                let u = lift_gate(g, &params, n);
                pending_u = Some(match pending_u.take() {
                    Some(acc) => u * acc,
                    None => u,
                });
            }
            CircuitOp::Noise(noise_op) => {
                flush(&mut channel, &mut pending_u);
                let noise_channel =
                    standard_noise(noise_op.kind, noise_op.p, noise_op.qubit, n)?;
                channel = KrausChannel::compose(&noise_channel, &channel, tol)?;
            }
        }
    }
    flush(&mut channel, &mut pending_u);

    // End-of-circuit noise from the spec.
    if let Some(spec) = noise {
        if spec.placement == NoisePlacement::End {
            match (&spec.kind, &spec.custom_kraus) {
                (NoiseSpecKind::Standard(kind), _) => {
                    for qubit in 0..n {
                        let noise_channel = standard_noise(*kind, spec.p, qubit, n)?;
                        channel = KrausChannel::compose(&noise_channel, &channel, tol)?;
                    }
                }
                (NoiseSpecKind::Custom, Some(kraus)) => {
                    let kdim = kraus[0].nrows();
                    if kdim == 2 {
                        let single = KrausChannel::new(2, kraus.clone(), tol)?;
                        for qubit in 0..n {
                            let lifted = single.lift_to(n, qubit);
                            channel = KrausChannel::compose(&lifted, &channel, tol)?;
                        }
                    } else if kdim == dim {
                        let full = KrausChannel::new(dim, kraus.clone(), tol)?;
                        channel = KrausChannel::compose(&full, &channel, tol)?;
                    } else {
                        return Err(ChannelError::InvalidNoise(format!(
                            "custom Kraus dimension {kdim} matches neither 2 nor the circuit dimension {dim}"
                        )));
                    }
                }
                (NoiseSpecKind::Custom, None) => unreachable!("validated above"),
            }
        }
    }

    if channel.ops.len() > dim * dim {
        channel = channel.reduced(tol)?;
    }
    channel.validate(tol)?;
    Ok(channel)
}

/// Compile a circuit (with optional noise) to both Kraus and superoperator
/// forms, cross-checking that the two agree on probe states.
///
/// Admits up to [`MAX_SUPEROP_QUBITS`] qubits (the dense superoperator is
/// `4^n × 4^n`).
pub fn compile_channel(
    circ: &CircuitIR,
    noise: Option<&NoiseSpec>,
    tol: &Tolerances,
) -> Result<(KrausChannel, SuperOp), ChannelError> {
    if circ.n_qubits > MAX_SUPEROP_QUBITS {
        return Err(ChannelError::TooLarge {
            n_qubits: circ.n_qubits,
            limit: MAX_SUPEROP_QUBITS,
            form: "SuperOp",
        });
    }
    let kraus = compile_kraus(circ, noise, tol)?;
    let superop = kraus.superop();
    // Cross-check the two representations on probe states: the maximally
    // mixed state and the |0⟩⟨0| basis state.
    let dim = kraus.dim();
    for probe in [
        DensityMatrix::maximally_mixed(dim),
        DensityMatrix::basis_state(dim, 0),
    ] {
        let a = kraus.apply_matrix(probe.matrix());
        let b = superop.apply_matrix(probe.matrix());
        let deviation = max_abs_diff(&a, &b);
        if deviation > tol.completeness {
            return Err(ChannelError::Inconsistent { deviation });
        }
    }
    Ok((kraus, superop))
}
