//! Command-line surface for the qrover robustness verifier.
//!
//! Exit codes: `0` success, `2` verification found a non-robust item
//! (scripting-friendly), `1` any error (usage, IO, solver). Report data
//! goes to stdout and `--out` files only — never to stderr — and all
//! output is byte-stable across runs and `--jobs` settings for fixed
//! seeds.

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qrover::{
    dataset_file_from_labeled, emit_qasm, inject_random_noise, labeled_from_dataset_file,
    load_dataset, load_model, load_model_bundle, render_table, results_value,
    robustness_lower_bound, run_attack, run_benchmark, save_dataset, save_model_bundle,
    save_report, to_canonical_json, verify_dataset, verify_state, witnesses_path_for,
    write_atomic, AttackConfig, AttackStrategy, BenchmarkConfig, BenchmarkTask, Classifier,
    DatasetItem, Jobs, LabeledDataset, LabeledItem, ModelManifest, NoiseEntry, Povm, Radius,
    SdpConfig, Tolerances, TrainConfig, VariationalModel, Verdict, VerifyMethod,
};
use serde_json::{json, Map, Value};
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

const EXIT_OK: i32 = 0;
const EXIT_ERROR: i32 = 1;
const EXIT_NON_ROBUST: i32 = 2;

#[derive(Parser)]
#[command(
    name = "qrover",
    version,
    about = "Formal robustness verification for small quantum classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify every dataset item against a robustness budget.
    Verify(VerifyArgs),
    /// Verify a single dataset item exactly (SDP radius).
    VerifyState(VerifyStateArgs),
    /// Certified lower bounds for every dataset item, no SDP.
    LowerBound(LowerBoundArgs),
    /// Gradient attacks on feature-encoded dataset items.
    Attack(AttackArgs),
    /// Attach a noise model to a model bundle.
    Noise(NoiseArgs),
    /// Train a variational classifier on a dataset.
    Train(TrainArgs),
    /// Generate a task dataset file.
    GenData(GenDataArgs),
    /// Run the five-step robustness benchmark.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct JobsArg {
    /// Dataset-level worker threads: 0 = auto, 1 = sequential.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl JobsArg {
    fn jobs(&self) -> Jobs {
        Jobs::from_count(self.jobs)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Certified lower bounds only (under-approximation).
    Lb,
    /// Exact SDP radius for every correctly classified item.
    Exact,
    /// Lower-bound pre-screen, SDP only where inconclusive.
    Mixed,
}

impl MethodArg {
    fn method(self) -> VerifyMethod {
        match self {
            MethodArg::Lb => VerifyMethod::Lb,
            MethodArg::Exact => VerifyMethod::Exact,
            MethodArg::Mixed => VerifyMethod::Mixed,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Model manifest path.
    #[arg(long)]
    model: PathBuf,
    /// Dataset file path.
    #[arg(long)]
    dataset: PathBuf,
    /// Robustness budget ε, strictly between 0 and 1.
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Mixed)]
    method: MethodArg,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Args)]
struct VerifyStateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Item index within the dataset.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Robustness budget ε, strictly between 0 and 1.
    #[arg(long)]
    epsilon: f64,
    /// Optional structured result file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LowerBoundArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Optional structured result file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Fgsm,
    MaskFgsm,
}

impl StrategyArg {
    fn strategy(self) -> AttackStrategy {
        match self {
            StrategyArg::Fgsm => AttackStrategy::Fgsm,
            StrategyArg::MaskFgsm => AttackStrategy::MaskFgsm,
        }
    }
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = StrategyArg::MaskFgsm)]
    strategy: StrategyArg,
    /// Initial step size (doubled on each escalation).
    #[arg(long, default_value_t = 0.05)]
    strength: f64,
    /// Fraction of features Mask-FGSM perturbs.
    #[arg(long, default_value_t = 0.25)]
    mask_fraction: f64,
    /// Maximum step-size escalations after the initial step.
    #[arg(long, default_value_t = 10)]
    escalations: u32,
    /// Finite-shot gradients with this many shots per expectation.
    #[arg(long)]
    shots: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Attack report output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional witness dataset (successful adversarial inputs, correct labels).
    #[arg(long)]
    witnesses: Option<PathBuf>,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(name = "bit_flip", alias = "bit-flip")]
    BitFlip,
    #[value(name = "phase_flip", alias = "phase-flip")]
    PhaseFlip,
    Depolarizing,
    Custom,
}

impl KindArg {
    fn name(self) -> &'static str {
        match self {
            KindArg::BitFlip => "bit_flip",
            KindArg::PhaseFlip => "phase_flip",
            KindArg::Depolarizing => "depolarizing",
            KindArg::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    End,
    Random,
}

#[derive(Args)]
struct NoiseArgs {
    /// Input model manifest path.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Error probability (upper bound of the per-qubit draw for random
    /// placement).
    #[arg(long)]
    p: f64,
    #[arg(long, value_enum, default_value_t = PlacementArg::End)]
    placement: PlacementArg,
    /// Seed for random placement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Kraus-operator file for --kind custom: a JSON array of matrices of
    /// [re, im] pairs.
    #[arg(long)]
    kraus: Option<PathBuf>,
    /// Output model manifest path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Register size; inferred from the dataset when omitted.
    #[arg(long)]
    n_qubits: Option<usize>,
    /// Ansatz layers.
    #[arg(long, default_value_t = 2)]
    layers: usize,
    /// Epochs per training phase.
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0.25)]
    learning_rate: f64,
    /// Minibatch size; 0 = full batch.
    #[arg(long, default_value_t = 0)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// After the clean phase, harvest adversarial examples and retrain on
    /// the augmented set.
    #[arg(long)]
    adversarial: bool,
    /// Output model manifest path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Lcei,
    Synthetic,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Qubits (= features for the synthetic task).
    #[arg(long, default_value_t = 3)]
    n_qubits: usize,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Qubits (= features for the synthetic task).
    #[arg(long, default_value_t = 3)]
    n_qubits: usize,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for results.json and table.txt.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    jobs: JobsArg,
}

fn main() {
    let code = match Cli::try_parse() {
        Ok(cli) => match run(cli) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_ERROR
            }
        },
        Err(e) => {
            // clap's default exit code for usage errors is 2, which this
            // tool reserves for "non-robust item found".
            let _ = e.print();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                EXIT_OK
            } else {
                EXIT_ERROR
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::VerifyState(args) => cmd_verify_state(args),
        Command::LowerBound(args) => cmd_lower_bound(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Noise(args) => cmd_noise(args),
        Command::Train(args) => cmd_train(args),
        Command::GenData(args) => cmd_gen_data(args),
        Command::Benchmark(args) => cmd_benchmark(args),
    }
}

fn tolerances() -> Tolerances {
    Tolerances::default()
}

fn sdp_config() -> Result<SdpConfig> {
    SdpConfig::from_env().map_err(|e| anyhow!(e))
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) || !eps.is_finite() {
        bail!("--epsilon must satisfy 0 < epsilon < 1, got {eps}");
    }
    Ok(())
}

fn load_model_and_dataset(
    model: &Path,
    dataset: &Path,
    tol: &Tolerances,
) -> Result<(Classifier, LabeledDataset)> {
    let classifier = load_model(model, tol)
        .with_context(|| format!("loading model {}", model.display()))?;
    let file = load_dataset(dataset)
        .with_context(|| format!("loading dataset {}", dataset.display()))?;
    let labeled = labeled_from_dataset_file(&file, Some(classifier.n_qubits()), tol)
        .with_context(|| format!("materializing dataset {}", dataset.display()))?;
    Ok((classifier, labeled))
}

fn fmt_radius(r: Radius) -> String {
    match r {
        Radius::Finite(v) => format!("{v:.6}"),
        Radius::Infinite => "inf".to_string(),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    check_epsilon(args.epsilon)?;
    let tol = tolerances();
    let (classifier, labeled) = load_model_and_dataset(&args.model, &args.dataset, &tol)?;
    let report = verify_dataset(
        &classifier,
        args.epsilon,
        &labeled,
        args.method.method(),
        &sdp_config()?,
        args.jobs.jobs(),
        &tol,
    )?;
    save_report(&report, &args.out)
        .with_context(|| format!("writing report {}", args.out.display()))?;

    let non_robust = report
        .per_item
        .iter()
        .filter(|i| i.verdict == Verdict::NonRobust)
        .count();
    let uncertified = report
        .per_item
        .iter()
        .filter(|i| i.verdict == Verdict::Uncertified)
        .count();
    println!(
        "method {}  epsilon {:.6}",
        match report.method {
            VerifyMethod::Lb => "lb",
            VerifyMethod::Exact => "exact",
            VerifyMethod::Mixed => "mixed",
        },
        report.epsilon
    );
    println!(
        "items {}  misclassified {}  non-robust {}  uncertified {}",
        report.per_item.len(),
        report.misclassified.len(),
        non_robust,
        uncertified
    );
    println!("robust accuracy {:.6}", report.robust_accuracy);
    if let Some(u) = report.under_robust_accuracy {
        println!("under-approximation robust accuracy {u:.6}");
    }
    println!("sdp calls {}", report.sdp_calls);
    println!("report written to {}", args.out.display());
    if !report.adversarial_set.is_empty() {
        println!(
            "witnesses written to {}",
            witnesses_path_for(&args.out).display()
        );
    }
    Ok(if non_robust > 0 {
        EXIT_NON_ROBUST
    } else {
        EXIT_OK
    })
}

fn cmd_verify_state(args: VerifyStateArgs) -> Result<i32> {
    check_epsilon(args.epsilon)?;
    let tol = tolerances();
    let (classifier, labeled) = load_model_and_dataset(&args.model, &args.dataset, &tol)?;
    let item = labeled.items.get(args.index).ok_or_else(|| {
        anyhow!(
            "--index {} out of range for {} items",
            args.index,
            labeled.items.len()
        )
    })?;
    let rho = item.item.state();
    let verdict = verify_state(
        &classifier,
        args.epsilon,
        rho,
        &sdp_config()?,
        Jobs::Sequential,
        &tol,
    )?;
    let predicted = classifier.classify(rho, &tol)?;
    println!(
        "item {}  label {}  predicted {}",
        args.index,
        item.label,
        classifier.labels()[predicted]
    );
    println!(
        "epsilon {:.6}  optimal radius {}  verdict {}",
        args.epsilon,
        fmt_radius(verdict.eps_star),
        if verdict.robust { "robust" } else { "non-robust" }
    );
    if verdict.boundary {
        println!("witness sits exactly on the decision boundary");
    }
    if let Some(out) = &args.out {
        let mut o = Map::new();
        o.insert("boundary".into(), json!(verdict.boundary));
        o.insert("epsilon".into(), json!(args.epsilon));
        o.insert("index".into(), json!(args.index));
        o.insert("label".into(), json!(item.label));
        o.insert(
            "optimal".into(),
            match verdict.eps_star {
                Radius::Finite(v) => json!(v),
                Radius::Infinite => json!("inf"),
            },
        );
        o.insert(
            "predicted".into(),
            json!(classifier.labels()[predicted]),
        );
        o.insert("robust".into(), json!(verdict.robust));
        o.insert("schema_version".into(), json!(qrover::SCHEMA_VERSION));
        if let Some(t) = verdict.target_label {
            o.insert("target".into(), json!(classifier.labels()[t]));
        }
        write_atomic(out, &to_canonical_json(&Value::Object(o)))?;
        println!("result written to {}", out.display());
    }
    Ok(if verdict.robust {
        EXIT_OK
    } else {
        EXIT_NON_ROBUST
    })
}

fn cmd_lower_bound(args: LowerBoundArgs) -> Result<i32> {
    let tol = tolerances();
    let (classifier, labeled) = load_model_and_dataset(&args.model, &args.dataset, &tol)?;
    let rows = qrover::exec::map_items(args.jobs.jobs(), &labeled.items, |i, li| {
        let rho = li.item.state();
        let dist = classifier.outcome_distribution(rho, &tol)?;
        let predicted = classifier.classify(rho, &tol)?;
        let rlb = robustness_lower_bound(&dist)?;
        anyhow::Ok((i, predicted, rlb))
    });
    println!(
        "{:>4} {:>14} {:>14} {:>9} {:>12}",
        "idx", "label", "predicted", "correct", "rlb"
    );
    let mut out_rows = Vec::new();
    let mut min_rlb = f64::INFINITY;
    for (li, row) in labeled.items.iter().zip(rows) {
        let (i, predicted, rlb) = row?;
        let predicted = classifier.labels()[predicted].clone();
        let correct = predicted == li.label;
        println!(
            "{:>4} {:>14} {:>14} {:>9} {:>12.6}",
            i, li.label, predicted, correct, rlb
        );
        min_rlb = min_rlb.min(rlb);
        let mut o = Map::new();
        o.insert("correct".into(), json!(correct));
        o.insert("index".into(), json!(i));
        o.insert("label".into(), json!(li.label));
        o.insert("predicted".into(), json!(predicted));
        o.insert("rlb".into(), json!(rlb));
        out_rows.push(Value::Object(o));
    }
    println!("minimum rlb {min_rlb:.6}");
    if let Some(out) = &args.out {
        let doc = json!({
            "min_rlb": min_rlb,
            "rows": out_rows,
            "schema_version": qrover::SCHEMA_VERSION,
        });
        write_atomic(out, &to_canonical_json(&doc))?;
        println!("results written to {}", out.display());
    }
    Ok(EXIT_OK)
}

fn cmd_attack(args: AttackArgs) -> Result<i32> {
    let tol = tolerances();
    let (classifier, labeled) = load_model_and_dataset(&args.model, &args.dataset, &tol)?;
    let base_cfg = AttackConfig {
        strategy: args.strategy.strategy(),
        strength: args.strength,
        mask_fraction: args.mask_fraction,
        max_escalations: args.escalations,
        shots: args.shots,
        seed: args.seed,
        ..AttackConfig::default()
    };
    let results = qrover::exec::map_items(args.jobs.jobs(), &labeled.items, |i, li| {
        let Some(encoded) = li.item.encoded() else {
            return anyhow::Ok(None);
        };
        let mut cfg = base_cfg.clone();
        cfg.seed = args.seed ^ i as u64;
        let res = run_attack(&classifier, encoded, &cfg, &tol)?;
        anyhow::Ok(Some((encoded.features().to_vec(), res)))
    });

    let mut rows = Vec::new();
    let mut witness_items = Vec::new();
    let mut successes = 0usize;
    let mut attacked = 0usize;
    for (i, (li, res)) in labeled.items.iter().zip(results).enumerate() {
        let mut o = Map::new();
        o.insert("index".into(), json!(i));
        o.insert("label".into(), json!(li.label));
        match res? {
            None => {
                println!("{i:>4} {:>14}  skipped (raw state)", li.label);
                o.insert("skipped".into(), json!("raw state"));
            }
            Some((features, res)) => {
                attacked += 1;
                o.insert("features".into(), json!(features));
                o.insert("success".into(), json!(res.success));
                o.insert("escalations_used".into(), json!(res.escalations_used));
                if let (Some(adv), Some(rub)) = (&res.adversarial_input, res.rub) {
                    successes += 1;
                    let diff: Vec<f64> = adv
                        .features()
                        .iter()
                        .zip(&features)
                        .map(|(a, b)| a - b)
                        .collect();
                    println!(
                        "{i:>4} {:>14}  success  rub {rub:.6}  escalations {}  diff {:?}",
                        li.label, res.escalations_used, diff
                    );
                    o.insert("adversarial_features".into(), json!(adv.features()));
                    o.insert("diff".into(), json!(diff));
                    o.insert("rub".into(), json!(rub));
                    witness_items.push(LabeledItem {
                        item: DatasetItem::Encoded(adv.clone()),
                        label: li.label.clone(),
                    });
                } else {
                    println!("{i:>4} {:>14}  no adversarial example found", li.label);
                }
            }
        }
        rows.push(Value::Object(o));
    }
    println!(
        "attacked {attacked} of {} items; {successes} adversarial examples",
        labeled.items.len()
    );

    let doc = json!({
        "escalations": args.escalations,
        "mask_fraction": args.mask_fraction,
        "rows": rows,
        "schema_version": qrover::SCHEMA_VERSION,
        "seed": args.seed,
        "strategy": match args.strategy { StrategyArg::Fgsm => "fgsm", StrategyArg::MaskFgsm => "mask-fgsm" },
        "strength": args.strength,
        "successes": successes,
    });
    write_atomic(&args.out, &to_canonical_json(&doc))?;
    println!("attack report written to {}", args.out.display());

    if let Some(wpath) = &args.witnesses {
        if witness_items.is_empty() {
            println!("no witnesses to write");
        } else {
            let wdata = LabeledDataset::new(
                format!("{}-witnesses", labeled.name),
                witness_items,
            );
            let wfile = dataset_file_from_labeled(&wdata)?;
            save_dataset(&wfile, wpath)?;
            println!("witnesses written to {}", wpath.display());
        }
    }
    Ok(EXIT_OK)
}

fn cmd_noise(args: NoiseArgs) -> Result<i32> {
    let tol = tolerances();
    if matches!(args.kind, KindArg::Custom) && args.kraus.is_none() {
        bail!("--kind custom requires --kraus FILE");
    }
    let bundle = load_model_bundle(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let kraus = match &args.kraus {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading kraus file {}", path.display()))?;
            let parsed: Vec<Vec<Vec<[f64; 2]>>> = serde_json::from_str(&text)
                .with_context(|| format!("parsing kraus file {}", path.display()))?;
            Some(parsed)
        }
        None => None,
    };
    let entry = NoiseEntry {
        kind: args.kind.name().to_string(),
        p: args.p,
        placement: match args.placement {
            PlacementArg::End => "end".to_string(),
            PlacementArg::Random => "random".to_string(),
        },
        seed: args.seed,
        kraus,
    };
    let spec = entry.to_spec(&tol)?;

    let out_dir = args
        .out
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = args
        .out
        .file_stem()
        .ok_or_else(|| anyhow!("--out must name a manifest file"))?
        .to_string_lossy()
        .into_owned();

    let mut manifest = bundle.manifest.clone();
    manifest.qasm_path = format!("{stem}.qasm");
    manifest.noise = Some(entry);

    // Compile once up front so a broken combination fails before any file
    // is written.
    let compiled = Classifier::from_circuit(
        &bundle.circuit,
        Some(&spec),
        bundle.manifest.povm(&tol)?,
        &tol,
    )?;

    if matches!(args.placement, PlacementArg::Random) {
        let expanded = inject_random_noise(&bundle.circuit, args.seed, args.p)?;
        let sidecar_name = format!("{stem}.noise.qasm");
        std::fs::create_dir_all(&out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;
        write_atomic(&out_dir.join(&sidecar_name), &emit_qasm(&expanded))?;
        manifest
            .metadata
            .insert("noise_sidecar".into(), json!(sidecar_name));
        println!(
            "materialized noise placement written to {}",
            out_dir.join(&sidecar_name).display()
        );
    }

    save_model_bundle(&args.out, &manifest, &emit_qasm(&bundle.circuit))?;
    println!(
        "noisy model ({} qubits, {} classes) written to {}",
        compiled.n_qubits(),
        compiled.n_classes(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let tol = tolerances();
    let file = load_dataset(&args.dataset)
        .with_context(|| format!("loading dataset {}", args.dataset.display()))?;
    let labeled = labeled_from_dataset_file(&file, args.n_qubits, &tol)?;
    if labeled.items.is_empty() {
        bail!("dataset {} is empty", args.dataset.display());
    }
    let dim = labeled.items[0].item.state().dim();
    if labeled.items.iter().any(|li| li.item.state().dim() != dim) {
        bail!("dataset items have mixed dimensions; pass --n-qubits to enforce one");
    }
    if !dim.is_power_of_two() {
        bail!("item dimension {dim} is not a power of two");
    }
    let n_qubits = dim.trailing_zeros() as usize;

    let mut labels: Vec<String> = labeled.items.iter().map(|li| li.label.clone()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() != 2 {
        bail!(
            "training measures one qubit and needs exactly 2 classes, found {}: {:?}",
            labels.len(),
            labels
        );
    }
    let z = Povm::z_basis_on(n_qubits, n_qubits - 1);
    let povm = Povm::new(labels.clone(), z.elements().to_vec(), &tol)?;
    let mut model = VariationalModel::layered(n_qubits, args.layers, n_qubits - 1, args.seed)?;
    model.povm = povm;

    let cfg = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch: args.batch,
        seed: args.seed,
        adversarial: args.adversarial,
        attack_cfg: None,
    };
    let outcome = qrover::train(&model, &labeled, &cfg, args.jobs.jobs(), &tol)?;
    let accuracy = outcome.model.accuracy(&labeled, &tol)?;
    let final_loss = outcome
        .loss_curve
        .last()
        .copied()
        .expect("loss curve is never empty");

    let stem = args
        .out
        .file_stem()
        .ok_or_else(|| anyhow!("--out must name a manifest file"))?
        .to_string_lossy()
        .into_owned();
    let mut manifest = ModelManifest::new(format!("{stem}.qasm"), &outcome.model.povm);
    manifest.metadata.insert("accuracy".into(), json!(accuracy));
    manifest
        .metadata
        .insert("adversarial_added".into(), json!(outcome.adversarial_added));
    manifest.metadata.insert("batch".into(), json!(args.batch));
    manifest.metadata.insert("epochs".into(), json!(args.epochs));
    manifest.metadata.insert("final_loss".into(), json!(final_loss));
    manifest.metadata.insert("labels".into(), json!(labels));
    manifest.metadata.insert("layers".into(), json!(args.layers));
    manifest
        .metadata
        .insert("learning_rate".into(), json!(args.learning_rate));
    manifest
        .metadata
        .insert("loss_curve".into(), json!(outcome.loss_curve));
    manifest.metadata.insert("seed".into(), json!(args.seed));
    manifest
        .metadata
        .insert("source_dataset".into(), json!(labeled.name));
    save_model_bundle(
        &args.out,
        &manifest,
        &emit_qasm(&outcome.model.bound_circuit()),
    )?;

    println!(
        "trained {n_qubits}-qubit model: accuracy {accuracy:.6}, final loss {final_loss:.6}, adversarial examples added {}",
        outcome.adversarial_added
    );
    println!("model written to {}", args.out.display());
    Ok(EXIT_OK)
}

fn cmd_gen_data(args: GenDataArgs) -> Result<i32> {
    let data = match args.task {
        TaskArg::Lcei => qrover::generate_lcei(
            args.n_qubits,
            args.samples,
            (-FRAC_PI_2, FRAC_PI_2),
            args.seed,
        )?,
        TaskArg::Synthetic => {
            qrover::generate_synthetic(args.n_qubits, args.samples, args.seed)?
        }
    };
    let file = dataset_file_from_labeled(&data)?;
    save_dataset(&file, &args.out)?;
    println!(
        "dataset {} ({} items) written to {}",
        data.name,
        data.items.len(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<i32> {
    let task = match args.task {
        TaskArg::Lcei => BenchmarkTask::Lcei {
            n_qubits: args.n_qubits,
        },
        TaskArg::Synthetic => BenchmarkTask::Synthetic {
            n_features: args.n_qubits,
        },
    };
    let mut cfg = BenchmarkConfig::new(task);
    cfg.samples = args.samples;
    cfg.seed = args.seed;
    cfg.jobs = args.jobs.jobs();
    let report = run_benchmark(&cfg, &tolerances())?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let table = render_table(&report);
    write_atomic(
        &args.out.join("results.json"),
        &to_canonical_json(&results_value(&report)),
    )?;
    write_atomic(&args.out.join("table.txt"), &table)?;
    print!("{table}");
    println!("results written to {}", args.out.join("results.json").display());
    Ok(EXIT_OK)
}
