//! Conic-program backend for the exact robustness radius.
//!
//! For a target class `c`, the minimum fidelity distance from `ρ` to a
//! misclassified state solves
//!
//! ```text
//! maximize   (Tr X + Tr X†)/2
//! subject to [[ρ, X], [X†, σ]] ⪰ 0,   Tr σ = 1,   Tr[A_c σ] ≤ 0
//! ```
//!
//! whose optimum is `√F*` (the block-matrix characterization of root
//! fidelity), giving `ε*_c = 1 − (F*)² /` — precisely `1 − optimum²`. The
//! complex PSD constraint is embedded as a real one: `H = Hr + i·Hi ⪰ 0`
//! iff `[[Hr, −Hi], [Hi, Hr]] ⪰ 0`.

use crate::linalg::CMatrix;
use crate::state::DensityMatrix;
use crate::tol::Tolerances;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT, SolverStatus,
    SupportedConeT, ZeroConeT,
};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Environment variable overriding the solver convergence tolerance.
pub const SOLVER_TOL_ENV: &str = "QROVER_SOLVER_TOL";

/// Default interior-point convergence tolerance.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;

/// Solver configuration for the radius SDPs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpConfig {
    /// Convergence tolerance (gap and feasibility).
    pub solver_tol: f64,
    /// Iteration cap per solve.
    pub max_iter: u32,
    /// Print solver progress to stdout.
    pub verbose: bool,
}

impl Default for SdpConfig {
    fn default() -> Self {
        SdpConfig {
            solver_tol: DEFAULT_SOLVER_TOL,
            max_iter: 200,
            verbose: false,
        }
    }
}

impl SdpConfig {
    /// Default configuration with the tolerance overridden by the
    /// `QROVER_SOLVER_TOL` environment variable when set.
    pub fn from_env() -> Result<Self, String> {
        let mut cfg = SdpConfig::default();
        if let Ok(raw) = std::env::var(SOLVER_TOL_ENV) {
            let parsed: f64 = raw
                .trim()
                .parse()
                .map_err(|_| format!("{SOLVER_TOL_ENV}={raw:?} is not a number"))?;
            if !(parsed.is_finite() && parsed > 0.0 && parsed < 1.0) {
                return Err(format!(
                    "{SOLVER_TOL_ENV}={raw:?} must be a positive tolerance below 1"
                ));
            }
            cfg.solver_tol = parsed;
        }
        Ok(cfg)
    }
}

/// Outcome of one per-class distance SDP.
#[derive(Debug, Clone)]
pub(crate) enum SdpOutcome {
    /// Solved: the root fidelity `√F*` and the optimizing state.
    Optimal { sqrt_fidelity: f64, sigma: CMatrix },
    /// The misclassification region for this class is empty.
    Infeasible,
}

/// Terminal solver failure (numerical error, iteration cap, …).
#[derive(Debug, Clone)]
pub(crate) struct SolveFailure {
    pub status: String,
}

/// Variable layout: σ is Hermitian (N diagonal reals, then re/im pairs for
/// each upper-triangle entry, column-major); X is a full complex matrix
/// (re/im per entry, column-major).
struct VarLayout {
    n: usize,
}

impl VarLayout {
    fn new(n: usize) -> Self {
        VarLayout { n }
    }

    fn n_sigma(&self) -> usize {
        self.n * self.n
    }

    fn total(&self) -> usize {
        3 * self.n * self.n
    }

    fn sigma_diag(&self, i: usize) -> usize {
        i
    }

    /// Column-major enumeration of strict-upper pairs (i < j).
    fn offdiag_rank(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        j * (j - 1) / 2 + i
    }

    fn sigma_off_re(&self, i: usize, j: usize) -> usize {
        self.n + 2 * self.offdiag_rank(i, j)
    }

    fn sigma_off_im(&self, i: usize, j: usize) -> usize {
        self.n + 2 * self.offdiag_rank(i, j) + 1
    }

    fn x_re(&self, i: usize, j: usize) -> usize {
        self.n_sigma() + 2 * (j * self.n + i)
    }

    fn x_im(&self, i: usize, j: usize) -> usize {
        self.n_sigma() + 2 * (j * self.n + i) + 1
    }
}

/// svec index of entry `(r, c)` with `r ≤ c` in the column-major
/// upper-triangle packing used by the PSD triangle cone.
fn svec_index(r: usize, c: usize) -> usize {
    debug_assert!(r <= c);
    c * (c + 1) / 2 + r
}

/// Fold a Hermitian matrix given as explicit complex entries (both
/// triangles) into svec coordinates of its real embedding
/// `[[Hr, −Hi], [Hi, Hr]]` of side `2·half` (so `half` = complex side).
fn svec_of_embedding(entries: &[(usize, usize, Complex64)], half: usize) -> Vec<(usize, f64)> {
    let mut real: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add = |r: usize, c: usize, v: f64| {
        if v != 0.0 {
            *real.entry((r, c)).or_insert(0.0) += v;
        }
    };
    for &(a, b, v) in entries {
        add(a, b, v.re);
        add(half + a, half + b, v.re);
        add(a, half + b, -v.im);
        add(half + a, b, v.im);
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(real.len());
    for (&(r, c), &v) in real.iter() {
        if r > c {
            continue; // symmetric mirror already covered by (c, r)
        }
        let scaled = if r == c { v } else { v * sqrt2 };
        if scaled != 0.0 {
            out.push((svec_index(r, c), scaled));
        }
    }
    out
}

/// Solve the minimum-fidelity-distance SDP for one target class.
///
/// `rho` is the centre state, `a_c = E†(M_{c*} − M_c)` the Heisenberg-form
/// misclassification effect. Returns the root fidelity optimum and the
/// optimizing `σ`, or `Infeasible` when the solver certifies the
/// misclassification region empty.
pub(crate) fn solve_min_distance(
    rho: &CMatrix,
    a_c: &CMatrix,
    cfg: &SdpConfig,
) -> Result<SdpOutcome, SolveFailure> {
    let n = rho.nrows();
    let vars = VarLayout::new(n);
    let two_n = 2 * n;
    let svec_len = (2 * two_n) * (2 * two_n + 1) / 2;
    let m = 2 + svec_len;

    // Objective: minimize −Re Tr X.
    let mut q = vec![0.0; vars.total()];
    for i in 0..n {
        q[vars.x_re(i, i)] = -1.0;
    }

    let mut rows: Vec<usize> = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    let mut push = |r: usize, c: usize, v: f64| {
        if v != 0.0 {
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
    };

    // Row 0 (zero cone): Tr σ = 1.
    for i in 0..n {
        push(0, vars.sigma_diag(i), 1.0);
    }

    // Row 1 (nonnegative cone): Tr[A_c σ] ≤ 0.
    for i in 0..n {
        push(1, vars.sigma_diag(i), a_c[(i, i)].re);
    }
    for j in 0..n {
        for i in 0..j {
            push(1, vars.sigma_off_re(i, j), 2.0 * a_c[(i, j)].re);
            push(1, vars.sigma_off_im(i, j), 2.0 * a_c[(i, j)].im);
        }
    }

    // PSD rows: s = b − Ax = svec(embed(G(x))) with
    // G(x) = [[ρ, X], [X†, σ]]; the constant block contributes to b and
    // each variable's coefficient matrix to −A.
    let one = Complex64::new(1.0, 0.0);
    let im = Complex64::new(0.0, 1.0);
    let psd_offset = 2;
    let mut add_var_entries = |var: usize, entries: &[(usize, usize, Complex64)]| {
        for (svec_row, v) in svec_of_embedding(entries, two_n) {
            push(psd_offset + svec_row, var, -v);
        }
    };
    for i in 0..n {
        add_var_entries(vars.sigma_diag(i), &[(n + i, n + i, one)]);
    }
    for j in 0..n {
        for i in 0..j {
            add_var_entries(
                vars.sigma_off_re(i, j),
                &[(n + i, n + j, one), (n + j, n + i, one)],
            );
            add_var_entries(
                vars.sigma_off_im(i, j),
                &[(n + i, n + j, im), (n + j, n + i, -im)],
            );
        }
    }
    for j in 0..n {
        for i in 0..n {
            add_var_entries(vars.x_re(i, j), &[(i, n + j, one), (n + j, i, one)]);
            add_var_entries(vars.x_im(i, j), &[(i, n + j, im), (n + j, i, -im)]);
        }
    }

    let mut b = vec![0.0; m];
    b[0] = 1.0;
    let mut g0: Vec<(usize, usize, Complex64)> = Vec::with_capacity(n * n);
    for a in 0..n {
        for bb in 0..n {
            g0.push((a, bb, rho[(a, bb)]));
        }
    }
    for (svec_row, v) in svec_of_embedding(&g0, two_n) {
        b[psd_offset + svec_row] = v;
    }

    let a_mat = CscMatrix::new_from_triplets(m, vars.total(), rows, cols, vals);
    let p_mat = CscMatrix::zeros((vars.total(), vars.total()));
    let cones: Vec<SupportedConeT<f64>> = vec![
        ZeroConeT(1),
        NonnegativeConeT(1),
        PSDTriangleConeT(2 * two_n),
    ];
    let settings = DefaultSettings {
        verbose: cfg.verbose,
        max_iter: cfg.max_iter,
        tol_gap_abs: cfg.solver_tol,
        tol_gap_rel: cfg.solver_tol,
        tol_feas: cfg.solver_tol,
        ..DefaultSettings::default()
    };
    let mut solver =
        DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings).map_err(|e| SolveFailure {
            status: format!("solver setup failed: {e}"),
        })?;
    solver.solve();
    let status = solver.solution.status;
    match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            let x = &solver.solution.x;
            let sqrt_fidelity = (-solver.solution.obj_val).clamp(0.0, 1.0);
            let mut sigma = CMatrix::zeros(n, n);
            for i in 0..n {
                sigma[(i, i)] = Complex64::new(x[vars.sigma_diag(i)], 0.0);
            }
            for j in 0..n {
                for i in 0..j {
                    let z = Complex64::new(x[vars.sigma_off_re(i, j)], x[vars.sigma_off_im(i, j)]);
                    sigma[(i, j)] = z;
                    sigma[(j, i)] = z.conj();
                }
            }
            Ok(SdpOutcome::Optimal {
                sqrt_fidelity,
                sigma,
            })
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            Ok(SdpOutcome::Infeasible)
        }
        other => Err(SolveFailure {
            status: format!("{other:?}"),
        }),
    }
}

/// Cheap certificate check: if `λ_min(A_c)` is strictly positive then
/// `Tr[A_c σ] ≥ λ_min > 0` for every state, so the region is empty without
/// running the solver.
pub(crate) fn certainly_infeasible(a_c: &CMatrix, tol: &Tolerances) -> bool {
    match crate::linalg::min_eigenvalue(a_c, tol) {
        Ok(min) => min > tol.psd,
        Err(_) => false,
    }
}

/// Sanitize a solver-produced state into a valid density matrix.
pub(crate) fn sanitize_witness(sigma: CMatrix, tol: &Tolerances) -> Option<DensityMatrix> {
    DensityMatrix::sanitize(&sigma, tol).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, identity, C_ZERO};
    use approx::assert_abs_diff_eq;

    #[test]
    fn svec_embedding_identity_block() {
        // H = I₂ on a 2-dimensional complex space → embedding I₄.
        let entries = vec![
            (0, 0, Complex64::new(1.0, 0.0)),
            (1, 1, Complex64::new(1.0, 0.0)),
        ];
        let out = svec_of_embedding(&entries, 2);
        // Diagonal entries (0,0),(1,1),(2,2),(3,3) → svec indices 0,2,5,9.
        let idx: Vec<usize> = out.iter().map(|&(i, _)| i).collect();
        assert_eq!(idx, vec![0, 2, 5, 9]);
        assert!(out.iter().all(|&(_, v)| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn svec_embedding_imaginary_entry() {
        // H = [[0, i], [−i, 0]] (Hermitian): Hr = 0, Hi = [[0,1],[−1,0]].
        // Embedding: [[0,0,0,−1],[0,0,1,0],[0,1,0,0],[−1,0,0,0]].
        let entries = vec![
            (0, 1, Complex64::new(0.0, 1.0)),
            (1, 0, Complex64::new(0.0, -1.0)),
        ];
        let out = svec_of_embedding(&entries, 2);
        let sqrt2 = std::f64::consts::SQRT_2;
        // Upper-triangle nonzeros: (0,3)=−1 → svec 6; (1,2)=1 → svec 4.
        assert_eq!(out.len(), 2);
        assert!(out.contains(&(svec_index(0, 3), -sqrt2)));
        assert!(out.contains(&(svec_index(1, 2), sqrt2)));
    }

    #[test]
    fn pure_state_boundary_radius() {
        // Identity channel, Z POVM, ρ = |0⟩⟨0|: A = M₀ − M₁ = diag(1, −1).
        let rho = DensityMatrix::basis_state(2, 0).into_matrix();
        let a_c = CMatrix::from_row_slice(2, 2, &[cr(1.0), C_ZERO, C_ZERO, cr(-1.0)]);
        let out = solve_min_distance(&rho, &a_c, &SdpConfig::default()).unwrap();
        match out {
            SdpOutcome::Optimal {
                sqrt_fidelity,
                sigma,
            } => {
                let eps = 1.0 - sqrt_fidelity * sqrt_fidelity;
                assert_abs_diff_eq!(eps, 0.5, epsilon = 1e-6);
                assert_abs_diff_eq!(sigma[(0, 0)].re, 0.5, epsilon = 1e-5);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_when_effect_positive_definite() {
        let rho = DensityMatrix::maximally_mixed(2).into_matrix();
        let a_c = identity(2);
        assert!(certainly_infeasible(&a_c, &Tolerances::default()));
        let out = solve_min_distance(&rho, &a_c, &SdpConfig::default()).unwrap();
        assert!(matches!(out, SdpOutcome::Infeasible));
    }

    #[test]
    fn env_config_parses() {
        // No env manipulation here (tests run in parallel); just defaults.
        let cfg = SdpConfig::default();
        assert_abs_diff_eq!(cfg.solver_tol, 1e-8);
    }
}
