//! Shared helpers for the integration suites: seeded random model
//! generators and an SDP-independent single-qubit radius oracle.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qrover::{
    CMatrix, CircuitIR, Classifier, DensityMatrix, GateKind, GateOp, NoiseSpec, Povm, Radius,
    SplitMix64, Tolerances,
};
use std::path::PathBuf;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Fuzz-input generator with three modes: raw bytes (lossy-decoded),
/// printable ASCII soup biased toward QASM punctuation, and single-byte
/// mutations of a valid program.
pub fn random_source(rng: &mut SplitMix64, i: u32, valid: &str) -> String {
    match i % 3 {
        0 => {
            let len = (rng.next_u64() % 200) as usize;
            let bytes: Vec<u8> = (0..len).map(|_| (rng.next_u64() & 0xff) as u8).collect();
            String::from_utf8_lossy(&bytes).into_owned()
        }
        1 => {
            const ALPHABET: &[u8] =
                b"qregcxhmeasurepi0123456789[](),;->.+-*/ \t\nOPENQASM2.0\"include";
            let len = (rng.next_u64() % 160) as usize;
            (0..len)
                .map(|_| ALPHABET[(rng.next_u64() as usize) % ALPHABET.len()] as char)
                .collect()
        }
        _ => {
            let mut bytes = valid.as_bytes().to_vec();
            let flips = 1 + (rng.next_u64() % 4) as usize;
            for _ in 0..flips {
                let pos = (rng.next_u64() as usize) % bytes.len();
                bytes[pos] = (rng.next_u64() & 0xff) as u8;
            }
            String::from_utf8_lossy(&bytes).into_owned()
        }
    }
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Standard normal via Box–Muller.
fn gaussian(rng: &mut SplitMix64) -> f64 {
    let u1 = 1.0 - rng.next_f64();
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn gaussian_matrix(rng: &mut SplitMix64, dim: usize) -> CMatrix {
    DMatrix::from_fn(dim, dim, |_, _| cx(gaussian(rng), gaussian(rng)))
}

/// Haar-ish random unitary: QR of a complex Gaussian matrix.
pub fn rand_unitary(rng: &mut SplitMix64, dim: usize) -> CMatrix {
    gaussian_matrix(rng, dim).qr().q()
}

/// Random full-rank density matrix `GG†/tr(GG†)`.
pub fn rand_density(rng: &mut SplitMix64, dim: usize, tol: &Tolerances) -> DensityMatrix {
    let g = gaussian_matrix(rng, dim);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m / cx(tr, 0.0), tol).expect("GG†/tr is a valid state")
}

/// Random valid POVM: `M₀ = U diag(λ) U†` with `λ ∈ [0.05, 0.95]`, the
/// complement split across the remaining classes.
pub fn rand_povm(rng: &mut SplitMix64, dim: usize, classes: usize, tol: &Tolerances) -> Povm {
    assert!(classes >= 2);
    let u = rand_unitary(rng, dim);
    let lambda = DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            cx(rng.next_f64_range(0.05, 0.95), 0.0)
        } else {
            cx(0.0, 0.0)
        }
    });
    let m0 = &u * lambda * u.adjoint();
    let rest = DMatrix::identity(dim, dim) - &m0;
    let mut elements = vec![m0];
    // Split the complement with random positive weights summing to one;
    // scalar multiples of a PSD matrix stay PSD.
    let weights: Vec<f64> = (0..classes - 1)
        .map(|_| rng.next_f64_range(0.2, 1.0))
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &weights {
        elements.push(&rest * cx(w / total, 0.0));
    }
    let labels = (0..classes).map(|c| format!("c{c}")).collect();
    Povm::new(labels, elements, tol).expect("constructed POVM is valid")
}

/// Random circuit over the full supported gate set.
pub fn rand_circuit(rng: &mut SplitMix64, n_qubits: usize, max_gates: usize) -> CircuitIR {
    let mut circ = CircuitIR::empty(n_qubits);
    let n_gates = 1 + (rng.next_u64() as usize) % max_gates;
    for _ in 0..n_gates {
        let q = (rng.next_u64() as usize) % n_qubits;
        let angle = rng.next_f64_range(-std::f64::consts::PI, std::f64::consts::PI);
        let two_q = n_qubits >= 2 && rng.next_f64() < 0.3;
        let gate = if two_q {
            let mut q2 = (rng.next_u64() as usize) % n_qubits;
            if q2 == q {
                q2 = (q + 1) % n_qubits;
            }
            let kind = if rng.next_f64() < 0.5 {
                GateKind::Cx
            } else {
                GateKind::Cz
            };
            GateOp::new(kind, vec![q, q2], vec![])
        } else {
            match rng.next_u64() % 12 {
                0 => GateOp::simple(GateKind::H, q),
                1 => GateOp::simple(GateKind::X, q),
                2 => GateOp::simple(GateKind::Y, q),
                3 => GateOp::simple(GateKind::Z, q),
                4 => GateOp::simple(GateKind::S, q),
                5 => GateOp::simple(GateKind::T, q),
                6 => GateOp::simple(GateKind::Sdg, q),
                7 => GateOp::simple(GateKind::Tdg, q),
                8 => GateOp::new(GateKind::Rx, vec![q], vec![angle]),
                9 => GateOp::new(GateKind::Ry, vec![q], vec![angle]),
                10 => GateOp::new(GateKind::Rz, vec![q], vec![angle]),
                _ => GateOp::new(
                    GateKind::U3,
                    vec![q],
                    vec![angle, rng.next_f64_range(-1.0, 1.0), rng.next_f64_range(-1.0, 1.0)],
                ),
            }
        };
        circ.push_gate(gate);
    }
    circ
}

/// Random noise spec with `p ≤ p_max`: none, a standard end-placed
/// channel, or randomly placed per-qubit noise.
pub fn rand_noise(rng: &mut SplitMix64, p_max: f64) -> Option<NoiseSpec> {
    use qrover::NoiseKind;
    match rng.next_u64() % 4 {
        0 => None,
        1 => Some(NoiseSpec::random(
            rng.next_f64_open_closed(p_max),
            rng.next_u64(),
        )),
        k => {
            let kind = match k {
                2 => {
                    if rng.next_f64() < 0.5 {
                        NoiseKind::BitFlip
                    } else {
                        NoiseKind::PhaseFlip
                    }
                }
                _ => NoiseKind::Depolarizing,
            };
            Some(NoiseSpec::standard_end(
                kind,
                rng.next_f64_open_closed(p_max),
            ))
        }
    }
}

/// Random classifier: random circuit, random valid POVM, random noise
/// with `p ≤ p_max`.
pub fn rand_classifier(
    rng: &mut SplitMix64,
    n_qubits: usize,
    classes: usize,
    p_max: f64,
    tol: &Tolerances,
) -> Classifier {
    let circ = rand_circuit(rng, n_qubits, 6);
    let povm = rand_povm(rng, 1 << n_qubits, classes, tol);
    let noise = rand_noise(rng, p_max);
    Classifier::from_circuit(&circ, noise.as_ref(), povm, tol)
        .expect("random classifier compiles")
}

// ---------------------------------------------------------------------
// Single-qubit grid oracle
// ---------------------------------------------------------------------
//
// Works entirely in Bloch coordinates, independent of the SDP path:
//
//   σ(b) = ½(I + bₓσₓ + b_y σ_y + b_z σ_z),   |b| ≤ 1,
//   p_c(b) = tr(E_c σ(b)) = v_c + w_c·b            (affine, exact),
//   D_F(ρ, σ(b)) = ½(1 − a·b) − √(det ρ)·√(1 − |b|²)
//
// with `a` the Bloch vector of ρ (single-qubit closed form for the
// squared-fidelity distance). A counterexample region per rival class c
// is the half-space q_c(b) = p_c(b) − p_{c*}(b) ≥ 0 intersected with the
// ball; since D_F is convex with its zero at b = a (infeasible), the
// minimiser lies on the plane q_c = 0, so each rival reduces to a 2-D
// disk problem solved by a dense grid with staged refinement. A full 3-D
// scan supplies the feasible-point count and a cross-check.

pub struct GridOracle {
    /// Staged-grid minimum over all rival regions.
    pub radius: Radius,
    /// Analytic disk minimum (cross-check for the grid stages).
    pub closed_form: Radius,
    /// In-ball points visited by the 3-D scan.
    pub feasible_points: u64,
    /// Minimum over counterexample points seen by the 3-D scan alone.
    pub scan_min: Option<f64>,
}

fn bloch_vector(rho: &DensityMatrix) -> [f64; 3] {
    let m = rho.matrix();
    let x = (m[(0, 1)] + m[(1, 0)]).re;
    let y = (m[(0, 1)] - m[(1, 0)]).im * -1.0;
    let z = (m[(0, 0)] - m[(1, 1)]).re;
    [x, y, z]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimise `½(1 − a·b) − κ√(1 − |b|²)` over the disk `q = 0` ∩ ball by
/// dense grid plus staged refinement. Returns the grid value.
fn disk_grid_min(a: [f64; 3], kappa: f64, p0: [f64; 3], e1: [f64; 3], e2: [f64; 3]) -> f64 {
    let r_sq = (1.0 - dot(p0, p0)).max(0.0);
    let r = r_sq.sqrt();
    let base = 0.5 * (1.0 - dot(a, p0));
    let a1 = 0.5 * dot(a, e1);
    let a2 = 0.5 * dot(a, e2);
    let eval = |u: f64, v: f64| -> f64 {
        base - a1 * u - a2 * v - kappa * (r_sq - u * u - v * v).max(0.0).sqrt()
    };
    if r < 1e-12 {
        return base;
    }
    let mut best = f64::INFINITY;
    let mut best_uv = (0.0, 0.0);
    let scan = |cu: f64, cv: f64, half: f64, n: i64, best: &mut f64, uv: &mut (f64, f64)| {
        let step = half / n as f64;
        for i in -n..=n {
            let u = cu + i as f64 * step;
            for j in -n..=n {
                let v = cv + j as f64 * step;
                if u * u + v * v > r_sq {
                    continue;
                }
                let f = eval(u, v);
                if f < *best {
                    *best = f;
                    *uv = (u, v);
                }
            }
        }
        step
    };
    let mut step = scan(0.0, 0.0, r, 200, &mut best, &mut best_uv);
    for _ in 0..3 {
        step = scan(best_uv.0, best_uv.1, 4.0 * step, 80, &mut best, &mut best_uv);
    }
    best
}

pub fn grid_oracle(a: &Classifier, rho: &DensityMatrix, tol: &Tolerances) -> GridOracle {
    assert_eq!(a.n_qubits(), 1, "grid oracle is single-qubit only");
    let bloch = bloch_vector(rho);
    let m = rho.matrix();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
    let kappa = det.sqrt();
    let df = |b: [f64; 3]| -> f64 {
        0.5 * (1.0 - dot(bloch, b)) - kappa * (1.0 - dot(b, b)).max(0.0).sqrt()
    };

    // Exact affine outcome model p_c(b) = v_c + w_c · b from the
    // Heisenberg-picture effects.
    let star = a.classify(rho, tol).expect("oracle state classifies");
    let effects = a.heisenberg_povm();
    let sigmas: [CMatrix; 3] = [
        DMatrix::from_row_slice(2, 2, &[cx(0., 0.), cx(1., 0.), cx(1., 0.), cx(0., 0.)]),
        DMatrix::from_row_slice(2, 2, &[cx(0., 0.), cx(0., -1.), cx(0., 1.), cx(0., 0.)]),
        DMatrix::from_row_slice(2, 2, &[cx(1., 0.), cx(0., 0.), cx(0., 0.), cx(-1., 0.)]),
    ];
    let affine: Vec<(f64, [f64; 3])> = effects
        .iter()
        .map(|e| {
            let v = 0.5 * e.trace().re;
            let w = [
                0.5 * (e * &sigmas[0]).trace().re,
                0.5 * (e * &sigmas[1]).trace().re,
                0.5 * (e * &sigmas[2]).trace().re,
            ];
            (v, w)
        })
        .collect();
    let rivals: Vec<(f64, [f64; 3])> = (0..effects.len())
        .filter(|&c| c != star)
        .map(|c| {
            let (vc, wc) = &affine[c];
            let (vs, ws) = &affine[star];
            (
                vc - vs,
                [wc[0] - ws[0], wc[1] - ws[1], wc[2] - ws[2]],
            )
        })
        .collect();

    // 3-D scan: feasible-point count plus a coarse counterexample minimum.
    const N: i64 = 70;
    let mut feasible = 0u64;
    let mut scan_min = f64::INFINITY;
    for i in -N..=N {
        let x = i as f64 / N as f64;
        for j in -N..=N {
            let y = j as f64 / N as f64;
            for k in -N..=N {
                let z = k as f64 / N as f64;
                let b = [x, y, z];
                if dot(b, b) > 1.0 {
                    continue;
                }
                feasible += 1;
                if rivals.iter().any(|(q0, g)| q0 + dot(*g, b) >= 0.0) {
                    let f = df(b);
                    if f < scan_min {
                        scan_min = f;
                    }
                }
            }
        }
    }

    // Per-rival disk problems.
    let mut grid_best = f64::INFINITY;
    let mut closed_best = f64::INFINITY;
    for &(q0, g) in &rivals {
        let glen = norm(g);
        if q0 + glen < 0.0 {
            continue; // rival region misses the ball entirely
        }
        if glen < 1e-14 {
            // Constant q ≥ 0: ρ itself sits in the region.
            grid_best = 0.0;
            closed_best = 0.0;
            continue;
        }
        let n_hat = scale(g, 1.0 / glen);
        let p0 = scale(n_hat, -q0 / glen);
        let helper = if n_hat[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let e1 = {
            let c = cross(n_hat, helper);
            scale(c, 1.0 / norm(c))
        };
        let e2 = cross(n_hat, e1);

        let grid = disk_grid_min(bloch, kappa, p0, e1, e2).max(0.0);
        let r_sq = (1.0 - dot(p0, p0)).max(0.0);
        let a_par = dot(bloch, n_hat);
        let a_perp_sq = (dot(bloch, bloch) - a_par * a_par).max(0.0);
        let closed =
            (0.5 * (1.0 - dot(bloch, p0)) - r_sq.sqrt() * (det + a_perp_sq / 4.0).sqrt()).max(0.0);
        grid_best = grid_best.min(grid);
        closed_best = closed_best.min(closed);
    }

    GridOracle {
        radius: if grid_best.is_finite() {
            Radius::Finite(grid_best)
        } else {
            Radius::Infinite
        },
        closed_form: if closed_best.is_finite() {
            Radius::Finite(closed_best)
        } else {
            Radius::Infinite
        },
        feasible_points: feasible,
        scan_min: (scan_min.is_finite()).then_some(scan_min),
    }
}
