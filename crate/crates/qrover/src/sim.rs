//! Gate matrices and pure-state simulation.
//!
//! Basis convention: little-endian — qubit `k` addresses bit `k` of the
//! computational-basis index, so basis state `|q_{n−1} … q_1 q_0⟩` has index
//! `Σ_k q_k 2^k`. The `u3` gate follows the ZYZ convention
//! `u3(θ,φ,λ) = [[cos(θ/2), −e^{iλ} sin(θ/2)], [e^{iφ} sin(θ/2),
//! e^{i(φ+λ)} cos(θ/2)]]`.

use crate::circuit::{CircuitIR, CircuitOp, GateKind, GateOp};
use crate::linalg::{c, cr, CMatrix, CVector, C_ONE, C_ZERO};
use crate::state::PureState;
use crate::tol::Tolerances;
use num_complex::Complex64;
use thiserror::Error;

/// Errors from simulation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("circuit contains noise markers; pure-state simulation requires a unitary circuit")]
    HasNoise,
    #[error("parameter binding has {got} values but the circuit uses {expected} slots")]
    BindingTooShort { expected: usize, got: usize },
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error(transparent)]
    State(#[from] crate::state::StateError),
}

/// The 2×2 (or 4×4 for two-qubit kinds) unitary for a gate kind with the
/// given resolved parameters.
///
/// Two-qubit matrices are given in the little-endian basis of the pair
/// `(first operand = control → higher bit of the 2-bit index? no — see
/// note)`: callers lifting two-qubit gates should use [`apply_gate`] or
/// [`circuit_unitary`], which handle arbitrary qubit pairs directly.
pub fn gate_matrix_1q(kind: GateKind, params: &[f64]) -> CMatrix {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::H => CMatrix::from_row_slice(
            2,
            2,
            &[
                cr(inv_sqrt2),
                cr(inv_sqrt2),
                cr(inv_sqrt2),
                cr(-inv_sqrt2),
            ],
        ),
        GateKind::X => CMatrix::from_row_slice(2, 2, &[C_ZERO, C_ONE, C_ONE, C_ZERO]),
        GateKind::Y => {
            CMatrix::from_row_slice(2, 2, &[C_ZERO, c(0.0, -1.0), c(0.0, 1.0), C_ZERO])
        }
        GateKind::Z => CMatrix::from_row_slice(2, 2, &[C_ONE, C_ZERO, C_ZERO, cr(-1.0)]),
        GateKind::S => CMatrix::from_row_slice(2, 2, &[C_ONE, C_ZERO, C_ZERO, c(0.0, 1.0)]),
        GateKind::Sdg => {
            CMatrix::from_row_slice(2, 2, &[C_ONE, C_ZERO, C_ZERO, c(0.0, -1.0)])
        }
        GateKind::T => {
            let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
            CMatrix::from_row_slice(2, 2, &[C_ONE, C_ZERO, C_ZERO, phase])
        }
        GateKind::Tdg => {
            let phase = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
            CMatrix::from_row_slice(2, 2, &[C_ONE, C_ZERO, C_ZERO, phase])
        }
        GateKind::Rx => {
            let half = params[0] / 2.0;
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    cr(half.cos()),
                    c(0.0, -half.sin()),
                    c(0.0, -half.sin()),
                    cr(half.cos()),
                ],
            )
        }
        GateKind::Ry => {
            let half = params[0] / 2.0;
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    cr(half.cos()),
                    cr(-half.sin()),
                    cr(half.sin()),
                    cr(half.cos()),
                ],
            )
        }
        GateKind::Rz => {
            let half = params[0] / 2.0;
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::from_polar(1.0, -half),
                    C_ZERO,
                    C_ZERO,
                    Complex64::from_polar(1.0, half),
                ],
            )
        }
        GateKind::U3 => {
            let (theta, phi, lambda) = (params[0], params[1], params[2]);
            let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    cr(ch),
                    -Complex64::from_polar(1.0, lambda) * sh,
                    Complex64::from_polar(1.0, phi) * sh,
                    Complex64::from_polar(1.0, phi + lambda) * ch,
                ],
            )
        }
        GateKind::Id => CMatrix::identity(2, 2),
        GateKind::Cx | GateKind::Cz => panic!("two-qubit kind passed to gate_matrix_1q"),
    }
}

/// Apply one gate in place to a length-`2^n` amplitude slice.
///
/// `params` must already be resolved (no symbolic slots).
pub fn apply_gate(state: &mut [Complex64], gate: &GateOp, params: &[f64], n_qubits: usize) {
    let dim = 1usize << n_qubits;
    debug_assert_eq!(state.len(), dim);
    match gate.kind {
        GateKind::Cx => {
            let control = 1usize << gate.qubits[0];
            let target = 1usize << gate.qubits[1];
            for i in 0..dim {
                if i & control != 0 && i & target == 0 {
                    state.swap(i, i | target);
                }
            }
        }
        GateKind::Cz => {
            let control = 1usize << gate.qubits[0];
            let target = 1usize << gate.qubits[1];
            for amp in state.iter_mut().enumerate().filter_map(|(i, a)| {
                (i & control != 0 && i & target != 0).then_some(a)
            }) {
                *amp = -*amp;
            }
        }
        _ => {
            let m = gate_matrix_1q(gate.kind, params);
            let bit = 1usize << gate.qubits[0];
            for i in 0..dim {
                if i & bit == 0 {
                    let j = i | bit;
                    let a = state[i];
                    let b = state[j];
                    state[i] = m[(0, 0)] * a + m[(0, 1)] * b;
                    state[j] = m[(1, 0)] * a + m[(1, 1)] * b;
                }
            }
        }
    }
}

/// Run the circuit's unitary gates on `|0…0⟩` and return the final pure
/// state.
///
/// `binding` resolves symbolic parameter slots (`binding[slot]`); pass `&[]`
/// for circuits without slots. Errors if the circuit contains noise markers
/// or the binding is shorter than the circuit's slot count.
pub fn simulate_pure(circuit: &CircuitIR, binding: &[f64]) -> Result<PureState, SimError> {
    let start = PureState::basis(circuit.dim(), 0);
    simulate_pure_from(circuit, binding, &start)
}

/// Like [`simulate_pure`] but starting from an arbitrary pure state.
pub fn simulate_pure_from(
    circuit: &CircuitIR,
    binding: &[f64],
    start: &PureState,
) -> Result<PureState, SimError> {
    circuit.validate()?;
    if circuit.has_noise() {
        return Err(SimError::HasNoise);
    }
    let needed = circuit.slot_count();
    if binding.len() < needed {
        return Err(SimError::BindingTooShort {
            expected: needed,
            got: binding.len(),
        });
    }
    let mut amps: Vec<Complex64> = start.vector().iter().copied().collect();
    for op in &circuit.ops {
        if let CircuitOp::Gate(g) = op {
            let params = g.resolved_params(binding);
            apply_gate(&mut amps, g, &params, circuit.n_qubits);
        }
    }
    Ok(PureState::new(
        CVector::from_vec(amps),
        &Tolerances::default(),
    )?)
}

/// Full `N × N` unitary of the circuit's gates (noise markers must be
/// absent), built column-by-column with the statevector kernel.
pub fn circuit_unitary(circuit: &CircuitIR, binding: &[f64]) -> Result<CMatrix, SimError> {
    circuit.validate()?;
    if circuit.has_noise() {
        return Err(SimError::HasNoise);
    }
    let needed = circuit.slot_count();
    if binding.len() < needed {
        return Err(SimError::BindingTooShort {
            expected: needed,
            got: binding.len(),
        });
    }
    let dim = circuit.dim();
    let mut u = CMatrix::identity(dim, dim);
    for op in &circuit.ops {
        if let CircuitOp::Gate(g) = op {
            let params = g.resolved_params(binding);
            // Apply the gate to each column in place.
            for col in 0..dim {
                let mut column: Vec<Complex64> = u.column(col).iter().copied().collect();
                apply_gate(&mut column, g, &params, circuit.n_qubits);
                for (row, v) in column.into_iter().enumerate() {
                    u[(row, col)] = v;
                }
            }
        }
    }
    Ok(u)
}

/// The single-qubit unitary of `gate` lifted to `n` qubits
/// (`I ⊗ … ⊗ U ⊗ … ⊗ I` in the little-endian convention). Two-qubit gates
/// are lifted by direct basis action.
pub fn lift_gate(gate: &GateOp, params: &[f64], n_qubits: usize) -> CMatrix {
    let dim = 1usize << n_qubits;
    let mut u = CMatrix::identity(dim, dim);
    for col in 0..dim {
        let mut column: Vec<Complex64> = u.column(col).iter().copied().collect();
        apply_gate(&mut column, gate, params, n_qubits);
        for (row, v) in column.into_iter().enumerate() {
            u[(row, col)] = v;
        }
    }
    u
}
