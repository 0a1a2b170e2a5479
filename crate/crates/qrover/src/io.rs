//! Portable model, dataset, and report files.
//!
//! All three schemas are a single canonical structured-text format: JSON
//! with alphabetically sorted keys and every floating-point number written
//! as a decimal with 17 significant digits (`d.dddddddddddddddde±x`), which
//! round-trips `f64` bit-exactly. Complex numbers are always `[re, im]`
//! pairs. Writers are whole-file atomic (write temp + rename), and loaders
//! reject invariant violations — shape, PSD-ness, completeness, schema
//! version — with typed errors rather than panicking.
//!
//! A model bundle is a manifest (`schema_version: "qrover/1"`) referencing
//! an OpenQASM file relative to the manifest's directory, plus the POVM,
//! an optional noise specification, and free-form metadata. Datasets carry
//! `density`, `pure`, or `features` items; reports carry the per-item table
//! and reference a sibling witness dataset when adversarial examples were
//! found (omitted when none were).

use crate::attack::{EncodedInput, Encoding};
use crate::bounds::Radius;
use crate::channel::{NoisePlacement, NoiseSpec, NoiseSpecKind};
use crate::circuit::{CircuitIR, NoiseKind};
use crate::classifier::{Classifier, Povm};
use crate::linalg::{CMatrix, CVector};
use crate::qasm::parse_qasm;
use crate::sim::simulate_pure;
use crate::state::{DensityMatrix, PureState};
use crate::tol::Tolerances;
use crate::verify::{
    AdversarialExample, DatasetItem, ItemReport, LabeledDataset, LabeledItem,
    VerificationReport, Verdict, VerifyMethod,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Schema tag shared by all three file kinds.
pub const SCHEMA_VERSION: &str = "qrover/1";

/// Errors from file loading and saving.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("report error: {0}")]
    Report(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// ---------------------------------------------------------------------------
// Canonical JSON emission
// ---------------------------------------------------------------------------

/// A float as a decimal with exactly 17 significant digits. This formatting
/// is injective on finite `f64`, so re-serializing a parsed file reproduces
/// it byte for byte.
fn fmt_f64(x: f64) -> String {
    debug_assert!(x.is_finite(), "non-finite numbers never reach files");
    format!("{x:.16e}")
}

fn is_primitive(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn emit(v: &Value, out: &mut String, depth: usize) {
    const INDENT: &str = "  ";
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&fmt_f64(n.as_f64().expect("number is one of i64/u64/f64")));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(is_primitive) {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    emit(item, out, depth);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&INDENT.repeat(depth + 1));
                    emit(item, out, depth + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&INDENT.repeat(depth));
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
            } else {
                out.push_str("{\n");
                // serde_json's default map is BTree-backed, so iteration is
                // already in sorted key order.
                for (i, (k, val)) in map.iter().enumerate() {
                    out.push_str(&INDENT.repeat(depth + 1));
                    out.push_str(
                        &serde_json::to_string(k).expect("string serialization is infallible"),
                    );
                    out.push_str(": ");
                    emit(val, out, depth + 1);
                    if i + 1 < map.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&INDENT.repeat(depth));
                out.push('}');
            }
        }
    }
}

/// Render a JSON value in the canonical form used by every file this module
/// writes: sorted keys, 17-significant-digit decimals, trailing newline.
pub fn to_canonical_json(v: &Value) -> String {
    let mut out = String::new();
    emit(v, &mut out, 0);
    out.push('\n');
    out
}

/// Whole-file atomic write: the content lands under a temporary name in the
/// same directory and is renamed over the target.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), DataError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn parse_json(path: &Path, text: &str) -> Result<Value, DataError> {
    serde_json::from_str(text).map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn from_value<T: serde::de::DeserializeOwned>(path: &Path, v: Value) -> Result<T, DataError> {
    serde_json::from_value(v).map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn check_schema(kind: &str, got: &str) -> Result<(), DataError> {
    if got != SCHEMA_VERSION {
        return Err(DataError::Parse {
            path: PathBuf::new(),
            message: format!("{kind} schema version `{got}` (expected `{SCHEMA_VERSION}`)"),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Complex payload helpers
// ---------------------------------------------------------------------------

fn matrix_to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn pairs_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, DataError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(DataError::Dataset(format!(
            "matrix payload is not square ({n} rows)"
        )));
    }
    let mut m = CMatrix::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        for (c, &[re, im]) in row.iter().enumerate() {
            m[(r, c)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

fn vector_to_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn pairs_to_vector(pairs: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(pairs.len(), pairs.iter().map(|&[re, im]| Complex64::new(re, im)))
}

// ---------------------------------------------------------------------------
// Model manifests
// ---------------------------------------------------------------------------

/// One POVM effect in a manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PovmEntry {
    pub label: String,
    /// Row-major nested arrays of `[re, im]` pairs.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

/// Noise specification as stored in a manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NoiseEntry {
    /// `bit_flip`, `phase_flip`, `depolarizing`, or `custom`.
    pub kind: String,
    pub p: f64,
    /// `end` or `random`.
    pub placement: String,
    #[serde(default)]
    pub seed: u64,
    /// Kraus operators for `custom` noise, inline as `[re, im]` arrays.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl NoiseEntry {
    pub fn from_spec(spec: &NoiseSpec) -> Self {
        NoiseEntry {
            kind: match spec.kind {
                NoiseSpecKind::Standard(k) => k.name().to_string(),
                NoiseSpecKind::Custom => "custom".to_string(),
            },
            p: spec.p,
            placement: match spec.placement {
                NoisePlacement::End => "end".to_string(),
                NoisePlacement::Random => "random".to_string(),
            },
            seed: spec.seed,
            kraus: spec
                .custom_kraus
                .as_ref()
                .map(|ops| ops.iter().map(matrix_to_pairs).collect()),
        }
    }

    pub fn to_spec(&self, tol: &Tolerances) -> Result<NoiseSpec, DataError> {
        let kind = if self.kind == "custom" {
            NoiseSpecKind::Custom
        } else {
            let std_kind = NoiseKind::ALL
                .iter()
                .copied()
                .find(|k| k.name() == self.kind)
                .ok_or_else(|| {
                    DataError::Manifest(format!("unknown noise kind `{}`", self.kind))
                })?;
            NoiseSpecKind::Standard(std_kind)
        };
        let placement = match self.placement.as_str() {
            "end" => NoisePlacement::End,
            "random" => NoisePlacement::Random,
            other => {
                return Err(DataError::Manifest(format!(
                    "unknown noise placement `{other}`"
                )))
            }
        };
        let custom_kraus = match &self.kraus {
            Some(ops) => Some(
                ops.iter()
                    .map(|rows| pairs_to_matrix(rows))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| DataError::Manifest(format!("bad kraus payload: {e}")))?,
            ),
            None => None,
        };
        let spec = NoiseSpec {
            kind,
            p: self.p,
            custom_kraus,
            placement,
            seed: self.seed,
        };
        spec.validate(tol)
            .map_err(|e| DataError::Manifest(format!("invalid noise spec: {e}")))?;
        Ok(spec)
    }
}

/// A model bundle's manifest: circuit reference, measurement, noise,
/// free-form metadata.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelManifest {
    pub schema_version: String,
    /// OpenQASM file, relative to the manifest's directory.
    pub qasm_path: String,
    pub povm: Vec<PovmEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, Value>,
}

impl ModelManifest {
    /// Manifest for a circuit + POVM pair, without noise or metadata.
    pub fn new(qasm_path: impl Into<String>, povm: &Povm) -> Self {
        ModelManifest {
            schema_version: SCHEMA_VERSION.to_string(),
            qasm_path: qasm_path.into(),
            povm: povm
                .labels()
                .iter()
                .zip(povm.elements())
                .map(|(label, m)| PovmEntry {
                    label: label.clone(),
                    matrix: matrix_to_pairs(m),
                })
                .collect(),
            noise: None,
            metadata: BTreeMap::new(),
        }
    }

    /// Reassemble the POVM (validating completeness and PSD-ness).
    pub fn povm(&self, tol: &Tolerances) -> Result<Povm, DataError> {
        let labels = self.povm.iter().map(|e| e.label.clone()).collect();
        let elements = self
            .povm
            .iter()
            .map(|e| pairs_to_matrix(&e.matrix))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| DataError::InvalidPovm(e.to_string()))?;
        Povm::new(labels, elements, tol).map_err(|e| DataError::InvalidPovm(e.to_string()))
    }
}

/// A loaded model bundle: the manifest, the parsed circuit, and the
/// directory files resolve against.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub manifest: ModelManifest,
    pub circuit: CircuitIR,
    pub dir: PathBuf,
}

/// Load a manifest without compiling the model.
pub fn load_manifest(path: &Path) -> Result<ModelManifest, DataError> {
    let text = read_text(path)?;
    let value = parse_json(path, &text)?;
    let manifest: ModelManifest = from_value(path, value)?;
    check_schema("manifest", &manifest.schema_version).map_err(|e| match e {
        DataError::Parse { message, .. } => DataError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    Ok(manifest)
}

/// Load a model bundle: manifest plus the referenced QASM circuit.
pub fn load_model_bundle(path: &Path) -> Result<ModelBundle, DataError> {
    let manifest = load_manifest(path)?;
    let dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let qasm_file = dir.join(&manifest.qasm_path);
    let qasm_text = std::fs::read_to_string(&qasm_file).map_err(|e| {
        DataError::Manifest(format!(
            "referenced QASM file {} is unreadable: {e}",
            qasm_file.display()
        ))
    })?;
    let circuit = parse_qasm(&qasm_text).map_err(|e| DataError::Parse {
        path: qasm_file.clone(),
        message: e.to_string(),
    })?;
    Ok(ModelBundle {
        manifest,
        circuit,
        dir,
    })
}

/// Load and compile a model into a classifier, applying manifest noise.
pub fn load_model(path: &Path, tol: &Tolerances) -> Result<Classifier, DataError> {
    let bundle = load_model_bundle(path)?;
    compile_bundle(&bundle, tol)
}

/// Compile an already-loaded bundle.
pub fn compile_bundle(bundle: &ModelBundle, tol: &Tolerances) -> Result<Classifier, DataError> {
    let povm = bundle.manifest.povm(tol)?;
    let noise = match &bundle.manifest.noise {
        Some(entry) => Some(entry.to_spec(tol)?),
        None => None,
    };
    Classifier::from_circuit(&bundle.circuit, noise.as_ref(), povm, tol)
        .map_err(|e| DataError::Manifest(format!("model does not compile: {e}")))
}

/// Write a model bundle: the QASM text at the manifest's `qasm_path`
/// (relative to `manifest_path`'s directory) and the manifest itself.
pub fn save_model_bundle(
    manifest_path: &Path,
    manifest: &ModelManifest,
    qasm_text: &str,
) -> Result<(), DataError> {
    let dir = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_atomic(&dir.join(&manifest.qasm_path), qasm_text)?;
    let value = serde_json::to_value(manifest).expect("manifest serialization is infallible");
    write_atomic(manifest_path, &to_canonical_json(&value))
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// One dataset item on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetEntry {
    /// `density`, `pure`, or `features`.
    pub kind: String,
    /// Nested `[re, im]` arrays (density: matrix, pure: vector) or a real
    /// vector (features).
    pub payload: Value,
    pub label: String,
}

/// A dataset file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetFile {
    pub schema_version: String,
    #[serde(default)]
    pub name: String,
    /// Encoding for `features` items: `angle` (default) or `amplitude`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<String>,
    pub items: Vec<DatasetEntry>,
}

pub fn load_dataset(path: &Path) -> Result<DatasetFile, DataError> {
    let text = read_text(path)?;
    let value = parse_json(path, &text)?;
    let file: DatasetFile = from_value(path, value)?;
    check_schema("dataset", &file.schema_version).map_err(|e| match e {
        DataError::Parse { message, .. } => DataError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    Ok(file)
}

pub fn save_dataset(file: &DatasetFile, path: &Path) -> Result<(), DataError> {
    let value = serde_json::to_value(file).expect("dataset serialization is infallible");
    write_atomic(path, &to_canonical_json(&value))
}

/// Serialize an in-memory dataset.
///
/// Raw states become `density` items. Encoded items with the standard angle
/// layout (feature `i` → `ry` on qubit `i mod n`) and amplitude encodings
/// become `features` items; angle-family items with a custom preparation
/// circuit are stored as the `pure` state they prepare, since the circuit
/// itself has no file representation. Feature items must share one encoding.
pub fn dataset_file_from_labeled(t: &LabeledDataset) -> Result<DatasetFile, DataError> {
    let mut encoding: Option<&str> = None;
    let mut items = Vec::with_capacity(t.items.len());
    for (index, li) in t.items.iter().enumerate() {
        let entry = match &li.item {
            DatasetItem::State(rho) => DatasetEntry {
                kind: "density".to_string(),
                payload: json!(matrix_to_pairs(rho.matrix())),
                label: li.label.clone(),
            },
            DatasetItem::Encoded(e) => match e.encoding() {
                Encoding::Amplitude => {
                    match encoding {
                        None => encoding = Some("amplitude"),
                        Some("amplitude") => {}
                        Some(other) => {
                            return Err(DataError::Dataset(format!(
                                "item {index} is amplitude-encoded but the dataset already uses `{other}`"
                            )))
                        }
                    }
                    DatasetEntry {
                        kind: "features".to_string(),
                        payload: json!(e.features()),
                        label: li.label.clone(),
                    }
                }
                Encoding::Angle => {
                    let standard = EncodedInput::angle(e.features(), e.circuit().n_qubits)
                        .map(|rebuilt| rebuilt.circuit() == e.circuit())
                        .unwrap_or(false);
                    if standard {
                        match encoding {
                            None => encoding = Some("angle"),
                            Some("angle") => {}
                            Some(other) => {
                                return Err(DataError::Dataset(format!(
                                    "item {index} is angle-encoded but the dataset already uses `{other}`"
                                )))
                            }
                        }
                        DatasetEntry {
                            kind: "features".to_string(),
                            payload: json!(e.features()),
                            label: li.label.clone(),
                        }
                    } else {
                        let psi = simulate_pure(e.circuit(), e.features()).map_err(|err| {
                            DataError::Dataset(format!(
                                "item {index} failed to re-simulate: {err}"
                            ))
                        })?;
                        DatasetEntry {
                            kind: "pure".to_string(),
                            payload: json!(vector_to_pairs(psi.vector())),
                            label: li.label.clone(),
                        }
                    }
                }
            },
        };
        items.push(entry);
    }
    Ok(DatasetFile {
        schema_version: SCHEMA_VERSION.to_string(),
        name: t.name.clone(),
        encoding: encoding.map(str::to_string),
        items,
    })
}

/// Materialize a dataset file into verifiable items.
///
/// `n_qubits` fixes the register size feature items encode onto and the
/// expected dimension of state payloads; pass `None` to infer per item
/// (angle features then use one qubit per feature).
pub fn labeled_from_dataset_file(
    file: &DatasetFile,
    n_qubits: Option<usize>,
    tol: &Tolerances,
) -> Result<LabeledDataset, DataError> {
    let encoding = match file.encoding.as_deref() {
        None | Some("angle") => Encoding::Angle,
        Some("amplitude") => Encoding::Amplitude,
        Some(other) => {
            return Err(DataError::Dataset(format!("unknown encoding `{other}`")))
        }
    };
    let expected_dim = n_qubits.map(|n| 1usize << n);
    let mut items = Vec::with_capacity(file.items.len());
    for (index, entry) in file.items.iter().enumerate() {
        let item = match entry.kind.as_str() {
            "density" => {
                let rows: Vec<Vec<[f64; 2]>> = serde_json::from_value(entry.payload.clone())
                    .map_err(|e| {
                        DataError::Dataset(format!("item {index} density payload: {e}"))
                    })?;
                let mat = pairs_to_matrix(&rows)
                    .map_err(|e| DataError::Dataset(format!("item {index}: {e}")))?;
                check_dim(index, mat.nrows(), expected_dim)?;
                let rho = DensityMatrix::new(mat, tol).map_err(|e| {
                    DataError::Dataset(format!("item {index} is not a density matrix: {e}"))
                })?;
                DatasetItem::State(rho)
            }
            "pure" => {
                let pairs: Vec<[f64; 2]> = serde_json::from_value(entry.payload.clone())
                    .map_err(|e| DataError::Dataset(format!("item {index} pure payload: {e}")))?;
                check_dim(index, pairs.len(), expected_dim)?;
                let psi = PureState::new(pairs_to_vector(&pairs), tol).map_err(|e| {
                    DataError::Dataset(format!("item {index} is not a unit vector: {e}"))
                })?;
                DatasetItem::State(psi.to_density())
            }
            "features" => {
                let features: Vec<f64> = serde_json::from_value(entry.payload.clone())
                    .map_err(|e| {
                        DataError::Dataset(format!("item {index} features payload: {e}"))
                    })?;
                let encoded = match encoding {
                    Encoding::Angle => {
                        let n = n_qubits.unwrap_or(features.len());
                        EncodedInput::angle(&features, n)
                    }
                    Encoding::Amplitude => {
                        check_dim(index, features.len(), expected_dim)?;
                        EncodedInput::amplitude(&features)
                    }
                }
                .map_err(|e| DataError::Dataset(format!("item {index} does not encode: {e}")))?;
                DatasetItem::Encoded(encoded)
            }
            other => {
                return Err(DataError::Dataset(format!(
                    "item {index} has unknown kind `{other}`"
                )))
            }
        };
        items.push(LabeledItem {
            item,
            label: entry.label.clone(),
        });
    }
    Ok(LabeledDataset::new(file.name.clone(), items))
}

fn check_dim(index: usize, got: usize, expected: Option<usize>) -> Result<(), DataError> {
    if let Some(want) = expected {
        if got != want {
            return Err(DataError::Dataset(format!(
                "item {index} has dimension {got}, expected {want}"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

fn method_str(m: VerifyMethod) -> &'static str {
    match m {
        VerifyMethod::Lb => "lb",
        VerifyMethod::Exact => "exact",
        VerifyMethod::Mixed => "mixed",
    }
}

fn method_from_str(s: &str) -> Result<VerifyMethod, DataError> {
    match s {
        "lb" => Ok(VerifyMethod::Lb),
        "exact" => Ok(VerifyMethod::Exact),
        "mixed" => Ok(VerifyMethod::Mixed),
        other => Err(DataError::Report(format!("unknown method `{other}`"))),
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Robust => "robust",
        Verdict::NonRobust => "non-robust",
        Verdict::Uncertified => "uncertified",
        Verdict::SkippedMisclassified => "skipped-misclassified",
    }
}

fn verdict_from_str(s: &str) -> Result<Verdict, DataError> {
    match s {
        "robust" => Ok(Verdict::Robust),
        "non-robust" => Ok(Verdict::NonRobust),
        "uncertified" => Ok(Verdict::Uncertified),
        "skipped-misclassified" => Ok(Verdict::SkippedMisclassified),
        other => Err(DataError::Report(format!("unknown verdict `{other}`"))),
    }
}

fn radius_value(r: Radius) -> Value {
    match r {
        Radius::Finite(v) => json!(v),
        Radius::Infinite => json!("inf"),
    }
}

fn radius_from_value(v: &Value) -> Result<Radius, DataError> {
    match v {
        Value::String(s) if s == "inf" => Ok(Radius::Infinite),
        Value::Number(n) => n
            .as_f64()
            .map(Radius::Finite)
            .ok_or_else(|| DataError::Report("non-float radius".into())),
        other => Err(DataError::Report(format!("bad radius value {other}"))),
    }
}

/// File name of the witness dataset stored next to a report.
pub fn witnesses_path_for(report_path: &Path) -> PathBuf {
    let mut name = report_path.as_os_str().to_owned();
    name.push(".witnesses");
    PathBuf::from(name)
}

/// Write a verification report (and, when adversarial examples were found,
/// a sibling witness dataset that can be fed back into training). Timing is
/// never serialized, so fixed seeds give byte-identical files.
pub fn save_report(report: &VerificationReport, path: &Path) -> Result<(), DataError> {
    let mut root = Map::new();
    root.insert("schema_version".into(), json!(SCHEMA_VERSION));
    root.insert("epsilon".into(), json!(report.epsilon));
    root.insert("method".into(), json!(method_str(report.method)));
    root.insert("robust_accuracy".into(), json!(report.robust_accuracy));
    if let Some(u) = report.under_robust_accuracy {
        root.insert("under_robust_accuracy".into(), json!(u));
    }
    root.insert("sdp_calls".into(), json!(report.sdp_calls));
    root.insert("misclassified".into(), json!(report.misclassified));

    let items: Vec<Value> = report
        .per_item
        .iter()
        .map(|it| {
            let mut o = Map::new();
            o.insert("index".into(), json!(it.index));
            if let Some(r) = it.rlb {
                o.insert("rlb".into(), json!(r));
            }
            if let Some(r) = it.optimal {
                o.insert("optimal".into(), radius_value(r));
            }
            if let Some(r) = it.rub {
                o.insert("rub".into(), json!(r));
            }
            o.insert("verdict".into(), json!(verdict_str(it.verdict)));
            if let Some(w) = it.witness_ref {
                o.insert("witness_ref".into(), json!(w));
            }
            Value::Object(o)
        })
        .collect();
    root.insert("items".into(), Value::Array(items));

    if !report.adversarial_set.is_empty() {
        let adversarial: Vec<Value> = report
            .adversarial_set
            .iter()
            .map(|a| {
                json!({
                    "boundary": a.boundary,
                    "item_index": a.item_index,
                })
            })
            .collect();
        root.insert("adversarial".into(), Value::Array(adversarial));
        let witnesses = witnesses_path_for(path);
        let file_name = witnesses
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "witnesses".to_string());
        root.insert("witnesses_path".into(), json!(file_name));

        let witness_file = DatasetFile {
            schema_version: SCHEMA_VERSION.to_string(),
            name: "adversarial-witnesses".to_string(),
            encoding: None,
            items: report
                .adversarial_set
                .iter()
                .map(|a| DatasetEntry {
                    kind: "density".to_string(),
                    payload: json!(matrix_to_pairs(a.witness.matrix())),
                    label: a.label.clone(),
                })
                .collect(),
        };
        save_dataset(&witness_file, &witnesses)?;
    }

    write_atomic(path, &to_canonical_json(&Value::Object(root)))
}

fn get<'a>(o: &'a Map<String, Value>, key: &str) -> Result<&'a Value, DataError> {
    o.get(key)
        .ok_or_else(|| DataError::Report(format!("missing field `{key}`")))
}

fn get_f64(o: &Map<String, Value>, key: &str) -> Result<f64, DataError> {
    get(o, key)?
        .as_f64()
        .ok_or_else(|| DataError::Report(format!("field `{key}` is not a number")))
}

fn get_usize(o: &Map<String, Value>, key: &str) -> Result<usize, DataError> {
    get(o, key)?
        .as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| DataError::Report(format!("field `{key}` is not an integer")))
}

fn get_str<'a>(o: &'a Map<String, Value>, key: &str) -> Result<&'a str, DataError> {
    get(o, key)?
        .as_str()
        .ok_or_else(|| DataError::Report(format!("field `{key}` is not a string")))
}

/// Load a report written by [`save_report`], reassembling the adversarial
/// set from the sibling witness dataset when one is referenced. Timing is
/// zeroed: it is display-only state.
pub fn load_report(path: &Path, tol: &Tolerances) -> Result<VerificationReport, DataError> {
    let text = read_text(path)?;
    let value = parse_json(path, &text)?;
    let root = value
        .as_object()
        .ok_or_else(|| DataError::Report("report root is not an object".into()))?;
    let schema = get_str(root, "schema_version")?;
    if schema != SCHEMA_VERSION {
        return Err(DataError::Parse {
            path: path.to_path_buf(),
            message: format!("report schema version `{schema}` (expected `{SCHEMA_VERSION}`)"),
        });
    }
    let epsilon = get_f64(root, "epsilon")?;
    let method = method_from_str(get_str(root, "method")?)?;
    let robust_accuracy = get_f64(root, "robust_accuracy")?;
    let under_robust_accuracy = root.get("under_robust_accuracy").map(|v| {
        v.as_f64()
            .ok_or_else(|| DataError::Report("under_robust_accuracy is not a number".into()))
    });
    let under_robust_accuracy = under_robust_accuracy.transpose()?;
    let sdp_calls = get_usize(root, "sdp_calls")?;
    let misclassified: Vec<usize> = serde_json::from_value(get(root, "misclassified")?.clone())
        .map_err(|e| DataError::Report(format!("misclassified: {e}")))?;

    let items_value = get(root, "items")?
        .as_array()
        .ok_or_else(|| DataError::Report("items is not an array".into()))?;
    let mut per_item = Vec::with_capacity(items_value.len());
    for v in items_value {
        let o = v
            .as_object()
            .ok_or_else(|| DataError::Report("item row is not an object".into()))?;
        per_item.push(ItemReport {
            index: get_usize(o, "index")?,
            rlb: o.get("rlb").map(|v| v.as_f64().unwrap_or(f64::NAN)),
            optimal: o.get("optimal").map(radius_from_value).transpose()?,
            rub: o.get("rub").map(|v| v.as_f64().unwrap_or(f64::NAN)),
            verdict: verdict_from_str(get_str(o, "verdict")?)?,
            witness_ref: o.get("witness_ref").and_then(Value::as_u64).map(|u| u as usize),
        });
    }

    let mut adversarial_set = Vec::new();
    if let Some(adversarial) = root.get("adversarial") {
        let rows = adversarial
            .as_array()
            .ok_or_else(|| DataError::Report("adversarial is not an array".into()))?;
        let witness_name = get_str(root, "witnesses_path")?;
        let witness_path = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(witness_name);
        let witness_file = load_dataset(&witness_path)?;
        if witness_file.items.len() != rows.len() {
            return Err(DataError::Report(format!(
                "witness file has {} items but the report lists {}",
                witness_file.items.len(),
                rows.len()
            )));
        }
        for (row, entry) in rows.iter().zip(&witness_file.items) {
            let o = row
                .as_object()
                .ok_or_else(|| DataError::Report("adversarial row is not an object".into()))?;
            if entry.kind != "density" {
                return Err(DataError::Report(format!(
                    "witness item has kind `{}`, expected density",
                    entry.kind
                )));
            }
            let pairs: Vec<Vec<[f64; 2]>> = serde_json::from_value(entry.payload.clone())
                .map_err(|e| DataError::Report(format!("witness payload: {e}")))?;
            let mat = pairs_to_matrix(&pairs).map_err(|e| DataError::Report(e.to_string()))?;
            let witness = DensityMatrix::new(mat, tol)
                .map_err(|e| DataError::Report(format!("witness is not a state: {e}")))?;
            adversarial_set.push(AdversarialExample {
                witness,
                item_index: get_usize(o, "item_index")?,
                label: entry.label.clone(),
                boundary: get(o, "boundary")?
                    .as_bool()
                    .ok_or_else(|| DataError::Report("boundary is not a bool".into()))?,
            });
        }
    }

    Ok(VerificationReport {
        epsilon,
        method,
        per_item,
        robust_accuracy,
        under_robust_accuracy,
        adversarial_set,
        misclassified,
        sdp_calls,
        timing: Default::default(),
    })
}
