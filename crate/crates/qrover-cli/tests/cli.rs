//! End-to-end checks of the `qrover` binary: exit-code contract, output
//! determinism across runs and `--jobs` settings, and the documented
//! behavior of each subcommand.

use qrover::{
    dataset_file_from_labeled, emit_qasm, load_model, save_dataset, save_model_bundle,
    CircuitIR, DatasetItem, DensityMatrix, LabeledDataset, LabeledItem, ModelManifest, Povm,
    Tolerances,
};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qrover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrover"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> String {
    path.to_str().unwrap().to_owned()
}

/// Identity circuit, Z-basis measurement, and the two basis states: every
/// radius is exactly ½, so ε = 0.4 is robust and ε = 0.6 is not.
fn toy_model_and_dataset(dir: &Path) -> (PathBuf, PathBuf) {
    let tol = Tolerances::default();
    let manifest_path = dir.join("toy/model.json");
    let manifest = ModelManifest::new("model.qasm", &Povm::z_basis());
    save_model_bundle(&manifest_path, &manifest, &emit_qasm(&CircuitIR::empty(1))).unwrap();

    let data = LabeledDataset::new(
        "toy-basis",
        vec![
            LabeledItem {
                item: DatasetItem::State(DensityMatrix::basis_state(2, 0)),
                label: "0".into(),
            },
            LabeledItem {
                item: DatasetItem::State(DensityMatrix::basis_state(2, 1)),
                label: "1".into(),
            },
        ],
    );
    let dataset_path = dir.join("toy/data.json");
    save_dataset(&dataset_file_from_labeled(&data).unwrap(), &dataset_path).unwrap();
    let _ = tol;
    (manifest_path, dataset_path)
}

#[test]
fn verify_exit_codes_follow_the_radius() {
    let dir = tempfile::tempdir().unwrap();
    let (model, data) = toy_model_and_dataset(dir.path());

    let ok = qrover(&[
        "verify", "--model", &p(&model), "--dataset", &p(&data),
        "--epsilon", "0.4", "--out", &p(&dir.path().join("ok.report")),
    ]);
    assert_eq!(code(&ok), 0, "stdout: {}", stdout(&ok));
    assert!(stdout(&ok).contains("robust accuracy 1.000000"));
    assert!(!dir.path().join("ok.report.witnesses").exists());

    let bad = qrover(&[
        "verify", "--model", &p(&model), "--dataset", &p(&data),
        "--epsilon", "0.6", "--out", &p(&dir.path().join("bad.report")),
    ]);
    assert_eq!(code(&bad), 2);
    assert!(dir.path().join("bad.report").exists());
    assert!(
        dir.path().join("bad.report.witnesses").exists(),
        "non-robust items must produce a witness file"
    );

    // Report data never goes to stderr.
    assert!(bad.stderr.is_empty(), "stderr: {}", String::from_utf8_lossy(&bad.stderr));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (model, data) = toy_model_and_dataset(dir.path());
    let out = p(&dir.path().join("x.report"));

    for eps in ["1.5", "0", "1", "-0.2"] {
        let r = qrover(&[
            "verify", "--model", &p(&model), "--dataset", &p(&data),
            "--epsilon", eps, "--out", &out,
        ]);
        assert_eq!(code(&r), 1, "epsilon {eps} must be a usage error");
    }
    assert_eq!(code(&qrover(&["verify", "--nonsense"])), 1);
    assert_eq!(code(&qrover(&[])), 1);
    assert_eq!(code(&qrover(&["benchmark", "--task", "lcei", "--samples", "0", "--out", &out])), 1);
    assert_eq!(
        code(&qrover(&["noise", "--model", &p(&model), "--kind", "custom", "--p", "0.1", "--out", &out])),
        1,
        "custom noise without --kraus is a usage error"
    );
    assert_eq!(code(&qrover(&["--help"])), 0);
    assert_eq!(code(&qrover(&["--version"])), 0);
    assert_eq!(code(&qrover(&["verify", "--help"])), 0);
}

#[test]
fn verify_state_reports_the_exact_radius() {
    let dir = tempfile::tempdir().unwrap();
    let (model, data) = toy_model_and_dataset(dir.path());

    let r = qrover(&[
        "verify-state", "--model", &p(&model), "--dataset", &p(&data),
        "--index", "0", "--epsilon", "0.4",
    ]);
    assert_eq!(code(&r), 0);
    assert!(stdout(&r).contains("optimal radius 0.500000"), "stdout: {}", stdout(&r));
    assert!(stdout(&r).contains("verdict robust"));

    let r = qrover(&[
        "verify-state", "--model", &p(&model), "--dataset", &p(&data),
        "--index", "1", "--epsilon", "0.6",
    ]);
    assert_eq!(code(&r), 2);
    assert!(stdout(&r).contains("verdict non-robust"));

    let r = qrover(&[
        "verify-state", "--model", &p(&model), "--dataset", &p(&data),
        "--index", "7", "--epsilon", "0.4",
    ]);
    assert_eq!(code(&r), 1, "out-of-range index is an error");
}

#[test]
fn pipeline_is_byte_identical_across_jobs_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.json");
    let model = dir.path().join("model/model.json");

    assert_eq!(code(&qrover(&[
        "gen-data", "--task", "synthetic", "--n-qubits", "2", "--samples", "10",
        "--seed", "7", "--out", &p(&data),
    ])), 0);
    assert_eq!(code(&qrover(&[
        "train", "--dataset", &p(&data), "--epochs", "8", "--learning-rate", "0.2",
        "--seed", "7", "--out", &p(&model),
    ])), 0);

    let mut blobs = Vec::new();
    for (run, jobs) in [("a", "1"), ("b", "4"), ("c", "0")] {
        let sub = dir.path().join(run);
        std::fs::create_dir_all(&sub).unwrap();
        let report = sub.join("run.report");
        let r = qrover(&[
            "verify", "--model", &p(&model), "--dataset", &p(&data),
            "--epsilon", "0.05", "--jobs", jobs, "--out", &p(&report),
        ]);
        assert!(code(&r) == 0 || code(&r) == 2);
        let mut blob = std::fs::read(&report).unwrap();
        // Byte-compare stdout too, minus the lines naming the per-run paths.
        for line in stdout(&r).lines().filter(|l| !l.contains("written to")) {
            blob.extend(line.as_bytes());
            blob.push(b'\n');
        }
        blobs.push(blob);
    }
    assert!(
        blobs.iter().all(|b| b == &blobs[0]),
        "reports or stdout differ across --jobs settings"
    );

    // gen-data twice with the same seed is byte-identical too.
    let data2 = dir.path().join("data2.json");
    assert_eq!(code(&qrover(&[
        "gen-data", "--task", "synthetic", "--n-qubits", "2", "--samples", "10",
        "--seed", "7", "--out", &p(&data2),
    ])), 0);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&data2).unwrap());
}

#[test]
fn noise_bundles_are_deterministic_and_p_zero_is_identity() {
    let tol = Tolerances::default();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.json");
    let model = dir.path().join("model/model.json");
    assert_eq!(code(&qrover(&[
        "gen-data", "--task", "synthetic", "--n-qubits", "2", "--samples", "6",
        "--seed", "3", "--out", &p(&data),
    ])), 0);
    assert_eq!(code(&qrover(&[
        "train", "--dataset", &p(&data), "--epochs", "4", "--learning-rate", "0.2",
        "--seed", "3", "--out", &p(&model),
    ])), 0);

    // p = 0: the compiled superoperator must equal the clean one.
    let zero = dir.path().join("zero/model.json");
    assert_eq!(code(&qrover(&[
        "noise", "--model", &p(&model), "--kind", "depolarizing", "--p", "0",
        "--out", &p(&zero),
    ])), 0);
    let clean = load_model(&model, &tol).unwrap();
    let noisy = load_model(&zero, &tol).unwrap();
    let diff = (clean.superop().unwrap().matrix() - noisy.superop().unwrap().matrix())
        .map(|z| z.norm())
        .max();
    assert!(diff <= 1e-12, "p = 0 changed the channel by {diff}");

    // Fixed-seed random placement twice: identical manifest and sidecar.
    let mut bundles = Vec::new();
    for run in ["r1", "r2"] {
        let out = dir.path().join(run).join("model.json");
        assert_eq!(code(&qrover(&[
            "noise", "--model", &p(&model), "--kind", "bit_flip", "--p", "0.08",
            "--placement", "random", "--seed", "11", "--out", &p(&out),
        ])), 0);
        let mut blob = std::fs::read(&out).unwrap();
        blob.extend(std::fs::read(dir.path().join(run).join("model.noise.qasm")).unwrap());
        blob.extend(std::fs::read(dir.path().join(run).join("model.qasm")).unwrap());
        bundles.push(blob);
    }
    assert_eq!(bundles[0], bundles[1]);

    // The noisy bundle is itself loadable and verifiable.
    let report = dir.path().join("noisy.report");
    let r = qrover(&[
        "verify", "--model", &p(&dir.path().join("r1/model.json")), "--dataset", &p(&data),
        "--epsilon", "0.01", "--out", &p(&report),
    ]);
    assert!(code(&r) == 0 || code(&r) == 2);
}

#[test]
fn attack_writes_witnesses_and_reports_feature_diffs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.json");
    let model = dir.path().join("model/model.json");
    assert_eq!(code(&qrover(&[
        "gen-data", "--task", "synthetic", "--n-qubits", "2", "--samples", "8",
        "--seed", "7", "--out", &p(&data),
    ])), 0);
    assert_eq!(code(&qrover(&[
        "train", "--dataset", &p(&data), "--epochs", "8", "--learning-rate", "0.2",
        "--seed", "7", "--out", &p(&model),
    ])), 0);

    let out = dir.path().join("attack.json");
    let witnesses = dir.path().join("witnesses.json");
    let r = qrover(&[
        "attack", "--model", &p(&model), "--dataset", &p(&data), "--seed", "5",
        "--mask-fraction", "1.0", "--out", &p(&out), "--witnesses", &p(&witnesses),
    ]);
    assert_eq!(code(&r), 0);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap())
        .unwrap();
    let successes = doc["successes"].as_u64().unwrap();
    assert!(successes > 0, "expected at least one adversarial example");
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let hit = rows.iter().find(|r| r["success"] == serde_json::json!(true)).unwrap();
    assert_eq!(
        hit["diff"].as_array().unwrap().len(),
        hit["features"].as_array().unwrap().len(),
        "feature diff must be reported coordinate by coordinate"
    );
    assert!(hit["rub"].as_f64().unwrap() > 0.0);

    // The witness dataset parses and holds one item per success.
    let wdoc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&witnesses).unwrap()).unwrap();
    assert_eq!(wdoc["items"].as_array().unwrap().len() as u64, successes);
}

#[test]
fn benchmark_writes_stable_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut blobs = Vec::new();
    for run in ["b1", "b2"] {
        let out = dir.path().join(run);
        let r = qrover(&[
            "benchmark", "--task", "lcei", "--n-qubits", "2", "--samples", "5",
            "--seed", "1", "--out", &p(&out),
        ]);
        assert_eq!(code(&r), 0, "stdout: {}", stdout(&r));
        assert!(stdout(&r).contains("improvement ratio"));
        let mut blob = std::fs::read(out.join("results.json")).unwrap();
        blob.extend(std::fs::read(out.join("table.txt")).unwrap());
        blobs.push(blob);
    }
    assert_eq!(blobs[0], blobs[1], "fixed-seed benchmark must be reproducible");
}

#[test]
fn lower_bound_lists_every_item() {
    let dir = tempfile::tempdir().unwrap();
    let (model, data) = toy_model_and_dataset(dir.path());
    let out = dir.path().join("lb.json");
    let r = qrover(&[
        "lower-bound", "--model", &p(&model), "--dataset", &p(&data), "--out", &p(&out),
    ]);
    assert_eq!(code(&r), 0);
    // Basis states under the identity/Z classifier have rlb exactly ½.
    assert!(stdout(&r).contains("minimum rlb 0.500000"), "stdout: {}", stdout(&r));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
}
