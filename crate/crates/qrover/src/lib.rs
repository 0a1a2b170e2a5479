//! Robustness verification for small quantum classifiers.
//!
//! `qrover` computes three robustness quantities for a quantum classifier
//! `A = (E, {M_c})` (a noisy circuit channel plus a POVM) around an input
//! state `ρ`, all under the fidelity distance `D_F(ρ,σ) = 1 − F(ρ,σ)` with
//! the squared-fidelity convention:
//!
//! * a **certified lower bound** `ε_RLB` from the outcome distribution alone,
//! * the **exact robustness radius** `ε*` via a semidefinite program over
//!   mixed-state adversaries, and
//! * an **attack-derived upper bound** `ε_RUB` from FGSM-style gradient
//!   attacks on feature-encoded inputs.
//!
//! On top of these it verifies robust accuracy over labeled datasets,
//! supports adversarial retraining of small variational models, simulates
//! density matrices under Kraus noise, parses an OpenQASM 2.0 subset, and
//! reads/writes portable text formats for models, datasets, and reports.
//!
//! The `parallel` cargo feature (default on) runs per-item workloads on a
//! rayon pool; disabling it yields a fully sequential build with identical
//! results.

pub mod attack;
pub mod benchmark;
pub mod bounds;
pub mod channel;
pub mod circuit;
pub mod classifier;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod qasm;
pub mod rng;
pub mod sdp;
pub mod sim;
pub mod state;
pub mod tol;
pub mod train;
pub mod verify;

pub use attack::{
    fgsm_step, mask_fgsm_step, parameter_shift_gradient, run_attack, AttackConfig, AttackResult,
    AttackStrategy, EncodedInput, Encoding, LossSpec,
};
pub use benchmark::{
    render_table, results_value, run_benchmark, BenchmarkConfig, BenchmarkError,
    BenchmarkReport, BenchmarkTask, SampleRow,
};
pub use bounds::{
    assemble_bounds, optimal_radius, robustness_lower_bound, OptimalRadius, Radius,
    RobustnessBounds,
};
pub use channel::{
    compile_channel, compile_kraus, inject_random_noise, standard_noise, KrausChannel,
    NoisePlacement, NoiseSpec, NoiseSpecKind, SuperOp,
};
pub use circuit::{CircuitIR, CircuitOp, GateKind, GateOp, NoiseKind, NoiseOp};
pub use classifier::{expectation_to_probability, Classifier, Povm};
pub use exec::Jobs;
pub use io::{
    compile_bundle, dataset_file_from_labeled, labeled_from_dataset_file, load_dataset,
    load_manifest, load_model, load_model_bundle, load_report, save_dataset, save_model_bundle,
    save_report, to_canonical_json, witnesses_path_for, write_atomic, DataError, DatasetEntry,
    DatasetFile, ModelBundle, ModelManifest, NoiseEntry, PovmEntry, SCHEMA_VERSION,
};
pub use linalg::{CMatrix, CVector};
pub use qasm::{emit_qasm, parse_qasm};
pub use rng::SplitMix64;
pub use sdp::{SdpConfig, DEFAULT_SOLVER_TOL, SOLVER_TOL_ENV};
pub use state::{fidelity, fidelity_distance, DensityMatrix, PureState};
pub use tol::Tolerances;
pub use train::{
    critical_samples, generate_lcei, generate_synthetic, lcei_povm, train, TrainConfig,
    TrainOutcome, VariationalModel, DEFAULT_CRITICAL_FRACTION,
};
pub use verify::{
    under_robust_accuracy, verify_dataset, verify_state, DatasetItem, ItemReport, LabeledDataset,
    LabeledItem, StateVerdict, VerificationReport, Verdict, VerifyMethod,
};
