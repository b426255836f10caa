//! Command-line surface: decompose NPY tensors, compute a-priori bounds, run
//! the synthetic recovery, classification and image reconstruction studies,
//! and cross-check selections against the exhaustive oracle.
//!
//! One machine-readable JSON line goes to standard output; human-facing notes
//! go to standard error. Exit codes: 0 success, 2 input/validation error,
//! 3 selector infeasibility, 4 internal numeric failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use geohopca::experiments::{
    accuracy_and_confusion, curve_from_points, gen_synthetic, mean_std, recover_support,
    train_classifier, Orientation, RecoveryMethod, ScenarioSpec,
};
use geohopca::io::{archive, idx, npy, ppm};
use geohopca::pca::truncated_left_svd;
use geohopca::rng::Xoshiro256PlusPlus;
use geohopca::select::{brute_force_select, SelectorConfig, SelectorStatus};
use geohopca::shopca::{
    objective_f, sparse_geo_hopca, tensor_error_bound_terms, threshold_support, EtaSpec,
    ShopcaConfig,
};
use geohopca::tensor::{frobenius_norm_sq, unfold, DenseTensor, Matrix};
use geohopca::Error as LibError;

const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

fn lib_exit_code(err: &LibError) -> u8 {
    match err {
        LibError::EigenNoConvergence | LibError::NodeBudgetExhausted { .. } => EXIT_NUMERIC,
        LibError::InMode { source, .. } => lib_exit_code(source),
        _ => EXIT_VALIDATION,
    }
}

impl From<LibError> for Failure {
    fn from(err: LibError) -> Self {
        Failure {
            code: lib_exit_code(&err),
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::validation(err.to_string())
    }
}

type CliResult = Result<Value, Failure>;

#[derive(Parser)]
#[command(
    name = "geohopca",
    about = "Sparse higher-order PCA via geometric column selection",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose an NPY tensor and write the archive directory.
    Decompose(DecomposeArgs),
    /// Print the a-priori error bound and its per-mode terms.
    Bound(BoundArgs),
    /// Run a synthetic support-recovery scenario and emit CSV metrics.
    Synth(SynthArgs),
    /// Train and evaluate the nearest-subspace digit classifier.
    Classify(ClassifyArgs),
    /// Reconstruct a PPM image from selected sparse components.
    Reconstruct(ReconstructArgs),
    /// Exhaustively solve a small selection instance for verification.
    Oracle(OracleArgs),
}

/// Flat JSON config file mirroring the flag names; explicit flags win.
fn load_config(path: &Option<PathBuf>) -> Result<serde_json::Map<String, Value>, Failure> {
    match path {
        None => Ok(serde_json::Map::new()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::validation(format!("{}: {e}", p.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| Failure::validation(format!("{}: {e}", p.display())))?;
            match value {
                Value::Object(map) => Ok(map),
                _ => Err(Failure::validation(format!(
                    "{}: config must be a JSON object",
                    p.display()
                ))),
            }
        }
    }
}

fn config_lookup<'a>(map: &'a serde_json::Map<String, Value>, key: &str) -> Option<&'a Value> {
    map.get(key).or_else(|| map.get(&key.replace('-', "_")))
}

fn usize_list(value: &Value, key: &str) -> Result<Vec<usize>, Failure> {
    let parse_str = |s: &str| -> Result<Vec<usize>, Failure> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::validation(format!("bad value {t:?} for {key}")))
            })
            .collect()
    };
    match value {
        Value::String(s) => parse_str(s),
        Value::Array(items) => items
            .iter()
            .map(|v| {
                v.as_u64()
                    .map(|n| n as usize)
                    .ok_or_else(|| Failure::validation(format!("bad entry in {key}")))
            })
            .collect(),
        Value::Number(n) => n
            .as_u64()
            .map(|n| vec![n as usize])
            .ok_or_else(|| Failure::validation(format!("bad value for {key}"))),
        _ => Err(Failure::validation(format!("bad value for {key}"))),
    }
}

fn parse_usize_csv(text: &str, key: &str) -> Result<Vec<usize>, Failure> {
    usize_list(&Value::String(text.to_string()), key)
}

macro_rules! merged {
    ($flag:expr, $map:expr, $key:expr, $conv:expr) => {
        match &$flag {
            Some(v) => Some(v.clone()),
            None => match config_lookup($map, $key) {
                Some(value) => Some($conv(value)?),
                None => None,
            },
        }
    };
}

fn value_usize(value: &Value) -> Result<usize, Failure> {
    value
        .as_u64()
        .map(|n| n as usize)
        .or_else(|| value.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| Failure::validation("expected an unsigned integer"))
}

fn value_u64(value: &Value) -> Result<u64, Failure> {
    value
        .as_u64()
        .or_else(|| value.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| Failure::validation("expected an unsigned integer"))
}

fn value_f64(value: &Value) -> Result<f64, Failure> {
    value
        .as_f64()
        .or_else(|| value.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| Failure::validation("expected a number"))
}

fn value_string(value: &Value) -> Result<String, Failure> {
    match value {
        Value::String(s) => Ok(s.clone()),
        other => Ok(other.to_string()),
    }
}

fn value_bool(value: &Value) -> Result<bool, Failure> {
    value
        .as_bool()
        .ok_or_else(|| Failure::validation("expected a boolean"))
}

fn value_path(value: &Value) -> Result<PathBuf, Failure> {
    Ok(PathBuf::from(value_string(value)?))
}

fn read_tensor_checked(path: &Path) -> Result<DenseTensor, Failure> {
    npy::read_tensor_file(path).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

#[derive(Args)]
struct DecomposeArgs {
    /// Input tensor (.npy).
    input: Option<PathBuf>,
    /// Target ranks, e.g. 2,2,2.
    #[arg(long)]
    ranks: Option<String>,
    /// Per-mode sparsity caps, e.g. 5,5,5.
    #[arg(long)]
    sparsity: Option<String>,
    /// "auto" or a per-mode list of tolerances.
    #[arg(long)]
    eta: Option<String>,
    /// Archive output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve modes concurrently.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    max_cuts: Option<usize>,
    #[arg(long)]
    node_budget: Option<u64>,
    /// Flat JSON config file; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_eta_spec(text: &str, order: usize) -> Result<EtaSpec, Failure> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(EtaSpec::Auto);
    }
    let values: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.len() == order => Ok(EtaSpec::PerMode(v)),
        Ok(v) if v.len() == 1 => Ok(EtaSpec::PerMode(vec![v[0]; order])),
        Ok(v) => Err(Failure::validation(format!(
            "eta needs 1 or {order} values, got {}",
            v.len()
        ))),
        Err(_) => Err(Failure::validation(format!("bad eta value {text:?}"))),
    }
}

fn cmd_decompose(args: &DecomposeArgs) -> CliResult {
    let file = load_config(&args.config)?;
    let input = merged!(args.input, &file, "input", value_path)
        .ok_or_else(|| Failure::validation("missing input tensor path"))?;
    let out = merged!(args.out, &file, "out", value_path)
        .ok_or_else(|| Failure::validation("missing --out directory"))?;
    let ranks_text = merged!(args.ranks, &file, "ranks", value_string)
        .ok_or_else(|| Failure::validation("missing --ranks"))?;
    let sparsity_text = merged!(args.sparsity, &file, "sparsity", value_string)
        .ok_or_else(|| Failure::validation("missing --sparsity"))?;

    let x = read_tensor_checked(&input)?;
    let order = x.shape().order();
    let ranks = parse_usize_csv(&ranks_text, "ranks")?;
    let sparsity = parse_usize_csv(&sparsity_text, "sparsity")?;
    let eta_text = merged!(args.eta, &file, "eta", value_string).unwrap_or_else(|| "auto".into());
    let eta = parse_eta_spec(&eta_text, order)?;
    let parallel = args.parallel
        || config_lookup(&file, "parallel")
            .map(value_bool)
            .transpose()?
            .unwrap_or(false);

    let mut config = ShopcaConfig::new(ranks, sparsity).with_eta(eta);
    if let Some(v) = merged!(args.max_cuts, &file, "max-cuts", value_usize) {
        config.max_cuts = v;
    }
    if let Some(v) = merged!(args.node_budget, &file, "node-budget", value_u64) {
        config.node_budget = v;
    }
    config.parallel_modes = parallel;

    let started = Instant::now();
    let result = sparse_geo_hopca(&x, &config)?;
    let objective = objective_f(&x, &result.factors)?;
    let total_seconds = started.elapsed().as_secs_f64();
    archive::write_archive(&out, &config, &result)
        .map_err(|e| Failure::validation(format!("{}: {e}", out.display())))?;

    let statuses: Vec<String> = result.statuses.iter().map(|s| s.to_string()).collect();
    let norm = frobenius_norm_sq(&x);
    let report = json!({
        "command": "decompose",
        "input": input.display().to_string(),
        "out": out.display().to_string(),
        "ranks": config.ranks,
        "sparsity": config.sparsity,
        "eta_targets": result.eta_targets,
        "eta_achieved": result.eta_achieved,
        "statuses": statuses,
        "bound": result.bound,
        "objective": objective,
        "relative_objective": if norm > 0.0 { objective / norm } else { 0.0 },
        "mode_seconds": result.mode_seconds,
        "total_seconds": total_seconds,
    });
    if result
        .statuses
        .iter()
        .any(|s| *s == SelectorStatus::Infeasible)
    {
        println!("{report}");
        return Err(Failure {
            code: EXIT_INFEASIBLE,
            message: "one or more modes ended infeasible".into(),
        });
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

#[derive(Args)]
struct BoundArgs {
    input: Option<PathBuf>,
    #[arg(long)]
    ranks: Option<String>,
    #[arg(long)]
    sparsity: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_bound(args: &BoundArgs) -> CliResult {
    let file = load_config(&args.config)?;
    let input = merged!(args.input, &file, "input", value_path)
        .ok_or_else(|| Failure::validation("missing input tensor path"))?;
    let ranks_text = merged!(args.ranks, &file, "ranks", value_string)
        .ok_or_else(|| Failure::validation("missing --ranks"))?;
    let sparsity_text = merged!(args.sparsity, &file, "sparsity", value_string)
        .ok_or_else(|| Failure::validation("missing --sparsity"))?;
    let x = read_tensor_checked(&input)?;
    let config = ShopcaConfig::new(
        parse_usize_csv(&ranks_text, "ranks")?,
        parse_usize_csv(&sparsity_text, "sparsity")?,
    );
    let terms = tensor_error_bound_terms(&x, &config)?;
    Ok(json!({
        "command": "bound",
        "input": input.display().to_string(),
        "ranks": config.ranks,
        "sparsity": config.sparsity,
        "per_mode_terms": terms,
        "bound": terms.iter().sum::<f64>(),
    }))
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SynthArgs {
    /// Scenario number 1..=4.
    #[arg(long)]
    scenario: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep sizes, e.g. 10,20,30; default: 10 even steps up to the mode
    /// extent.
    #[arg(long)]
    k_grid: Option<String>,
    /// Signal rank used during recovery.
    #[arg(long)]
    rank: Option<usize>,
    /// Output directory for the CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run replicates concurrently.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

struct ReplicateRow {
    replicate: usize,
    mode: usize,
    method: RecoveryMethod,
    k: usize,
    tp: f64,
    fp: f64,
}

struct ReplicateResult {
    rows: Vec<ReplicateRow>,
    /// Per evaluated mode: the thresholding baseline's FP at its
    /// full-recovery operating point.
    baseline_full_fp: Vec<(usize, f64)>,
}

fn run_replicate(
    spec: &ScenarioSpec,
    replicate: usize,
    modes: &[usize],
    grid: &[usize],
    rank: usize,
) -> Result<ReplicateResult, LibError> {
    let (x, truth) = gen_synthetic(spec)?;
    let mut rows = Vec::new();
    let mut baseline_full_fp = Vec::new();
    for &mode in modes {
        let j = x.shape().dims()[mode - 1];
        let truth_support = &truth.supports[mode - 1];
        let mut ks: Vec<usize> = grid.iter().map(|&k| k.clamp(1, j)).collect();
        ks.push(truth_support.len());
        ks.sort_unstable();
        ks.dedup();
        let hosvd_factor = truncated_left_svd(&unfold(&x, mode)?, rank)?.u;
        baseline_full_fp.push((
            mode,
            geohopca::experiments::threshold_full_recovery_fp(&hosvd_factor, truth_support, j)?,
        ));
        for &k in &ks {
            let cfg = SelectorConfig::new(k, rank.min(k));
            let support = recover_support(&x, mode, &cfg)?;
            let m = geohopca::experiments::tp_fp(&support, truth_support, j);
            rows.push(ReplicateRow {
                replicate,
                mode,
                method: RecoveryMethod::GeoHopca,
                k,
                tp: m.tp_rate,
                fp: m.fp_rate,
            });
            let thresholded = threshold_support(&hosvd_factor, k)?;
            let m = geohopca::experiments::tp_fp(&thresholded, truth_support, j);
            rows.push(ReplicateRow {
                replicate,
                mode,
                method: RecoveryMethod::HosvdThreshold,
                k,
                tp: m.tp_rate,
                fp: m.fp_rate,
            });
        }
    }
    Ok(ReplicateResult {
        rows,
        baseline_full_fp,
    })
}

fn cmd_synth(args: &SynthArgs) -> CliResult {
    let file = load_config(&args.config)?;
    let scenario = merged!(args.scenario, &file, "scenario", value_usize)
        .ok_or_else(|| Failure::validation("missing --scenario"))?;
    let replicates = merged!(args.replicates, &file, "replicates", value_usize).unwrap_or(50);
    if replicates == 0 {
        return Err(Failure::validation("replicates must be positive"));
    }
    let seed = merged!(args.seed, &file, "seed", value_u64).unwrap_or(0);
    let rank = merged!(args.rank, &file, "rank", value_usize).unwrap_or(1);
    let out = merged!(args.out, &file, "out", value_path)
        .ok_or_else(|| Failure::validation("missing --out directory"))?;
    let parallel = args.parallel
        || config_lookup(&file, "parallel")
            .map(value_bool)
            .transpose()?
            .unwrap_or(false);

    let base_spec = ScenarioSpec::standard(scenario, seed)?;
    let j1 = base_spec.dims[0];
    let grid = match merged!(args.k_grid, &file, "k-grid", value_string) {
        Some(text) => parse_usize_csv(&text, "k-grid")?,
        None => (1..=10).map(|i| i * j1 / 10).collect(),
    };
    if grid.is_empty() {
        return Err(Failure::validation("k-grid must be nonempty"));
    }
    let modes = base_spec.sparse_modes.clone();

    let specs: Vec<ScenarioSpec> = (0..replicates)
        .map(|i| ScenarioSpec {
            seed: seed + i as u64,
            ..base_spec.clone()
        })
        .collect();
    let started = Instant::now();
    let per_replicate: Vec<ReplicateResult> = if parallel {
        specs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| run_replicate(spec, i, &modes, &grid, rank))
            .collect::<Result<_, _>>()?
    } else {
        specs
            .iter()
            .enumerate()
            .map(|(i, spec)| run_replicate(spec, i, &modes, &grid, rank))
            .collect::<Result<_, _>>()?
    };
    let elapsed = started.elapsed().as_secs_f64();

    fs::create_dir_all(&out)
        .map_err(|e| Failure::validation(format!("{}: {e}", out.display())))?;
    let mut metrics = String::from("scenario,mode,method,replicate,k,tp,fp\n");
    for result in &per_replicate {
        for row in &result.rows {
            metrics.push_str(&format!(
                "{scenario},{},{},{},{},{},{}\n",
                row.mode, row.method, row.replicate, row.k, row.tp, row.fp
            ));
        }
    }
    fs::write(out.join("metrics.csv"), metrics)?;

    // Aggregate table: the selection method is scored at the true support
    // size; the thresholding baseline at its full-recovery operating point
    // (where a magnitude cutoff on a dense factor lands, with tp = 1).
    let mut aggregate = String::from("scenario,mode,method,tp_mean,tp_std,fp_mean,fp_std\n");
    let mut summary = Vec::new();
    for &mode in &modes {
        let k_star = base_spec.support_size(base_spec.dims[mode - 1]);
        let tp: Vec<f64> = per_replicate
            .iter()
            .flat_map(|r| &r.rows)
            .filter(|r| r.mode == mode && r.method == RecoveryMethod::GeoHopca && r.k == k_star)
            .map(|r| r.tp)
            .collect();
        let fp: Vec<f64> = per_replicate
            .iter()
            .flat_map(|r| &r.rows)
            .filter(|r| r.mode == mode && r.method == RecoveryMethod::GeoHopca && r.k == k_star)
            .map(|r| r.fp)
            .collect();
        let baseline_fp: Vec<f64> = per_replicate
            .iter()
            .flat_map(|r| &r.baseline_full_fp)
            .filter(|(m, _)| *m == mode)
            .map(|(_, fp)| *fp)
            .collect();
        let (tp_mean, tp_std) = mean_std(&tp);
        let (fp_mean, fp_std) = mean_std(&fp);
        let (bfp_mean, bfp_std) = mean_std(&baseline_fp);
        aggregate.push_str(&format!(
            "{scenario},{mode},{},{tp_mean},{tp_std},{fp_mean},{fp_std}\n",
            RecoveryMethod::GeoHopca
        ));
        aggregate.push_str(&format!(
            "{scenario},{mode},{},1,0,{bfp_mean},{bfp_std}\n",
            RecoveryMethod::HosvdThreshold
        ));
        summary.push(json!({
            "mode": mode,
            "method": RecoveryMethod::GeoHopca.to_string(),
            "k": k_star,
            "tp_mean": tp_mean,
            "tp_std": tp_std,
            "fp_mean": fp_mean,
            "fp_std": fp_std,
        }));
        summary.push(json!({
            "mode": mode,
            "method": RecoveryMethod::HosvdThreshold.to_string(),
            "tp_mean": 1.0,
            "tp_std": 0.0,
            "fp_mean": bfp_mean,
            "fp_std": bfp_std,
        }));
    }
    fs::write(out.join("aggregate.csv"), aggregate)?;

    // Averaged sweep curves per mode and method, with AUC sidecars.
    let mut aucs = Vec::new();
    for &mode in &modes {
        for method in [RecoveryMethod::GeoHopca, RecoveryMethod::HosvdThreshold] {
            let mut ks: Vec<usize> = per_replicate
                .iter()
                .flat_map(|r| &r.rows)
                .filter(|r| r.mode == mode && r.method == method)
                .map(|r| r.k)
                .collect();
            ks.sort_unstable();
            ks.dedup();
            let mut points = Vec::new();
            for &k in &ks {
                let tp: Vec<f64> = per_replicate
                    .iter()
                    .flat_map(|r| &r.rows)
                    .filter(|r| r.mode == mode && r.method == method && r.k == k)
                    .map(|r| r.tp)
                    .collect();
                let fp: Vec<f64> = per_replicate
                    .iter()
                    .flat_map(|r| &r.rows)
                    .filter(|r| r.mode == mode && r.method == method && r.k == k)
                    .map(|r| r.fp)
                    .collect();
                points.push((mean_std(&fp).0, mean_std(&tp).0));
            }
            let curve = curve_from_points(points);
            let stem = format!("roc_s{scenario}_mode{mode}_{method}");
            let mut csv = String::from("fp,tp\n");
            for (fp, tp) in &curve.points {
                csv.push_str(&format!("{fp},{tp}\n"));
            }
            fs::write(out.join(format!("{stem}.csv")), csv)?;
            fs::write(
                out.join(format!("{stem}.json")),
                serde_json::to_string_pretty(&json!({ "auc": curve.auc })).unwrap() + "\n",
            )?;
            aucs.push(json!({
                "mode": mode,
                "method": method.to_string(),
                "auc": curve.auc,
            }));
        }
    }

    Ok(json!({
        "command": "synth",
        "scenario": scenario,
        "replicates": replicates,
        "seed": seed,
        "rank": rank,
        "out": out.display().to_string(),
        "aggregate": summary,
        "auc": aucs,
        "total_seconds": elapsed,
    }))
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ClassifyArgs {
    /// Directory holding the four IDX files.
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    test_per_class: Option<usize>,
    /// Fraction of training samples retained per class.
    #[arg(long)]
    ratio: Option<f64>,
    /// Per-class basis rank.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the confusion matrix CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Draws `count` seed-fixed sample columns per class from an IDX pair.
fn sample_classes(
    images: &idx::IdxImages,
    labels: &[u8],
    count: usize,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<Vec<Matrix>, Failure> {
    if labels.len() != images.samples.cols() {
        return Err(Failure::validation(format!(
            "label count {} does not match image count {}",
            labels.len(),
            images.samples.cols()
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); 10];
    for (i, &label) in labels.iter().enumerate() {
        if label > 9 {
            return Err(Failure::validation(format!("label {label} out of range")));
        }
        by_class[label as usize].push(i);
    }
    let dim = images.samples.rows();
    let mut stacks = Vec::with_capacity(10);
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < count {
            return Err(Failure::validation(format!(
                "class {class} has only {} samples, need {count}",
                members.len()
            )));
        }
        let picks = rng.choose_indices(members.len(), count);
        let mut data = Vec::with_capacity(dim * count);
        for &p in &picks {
            data.extend_from_slice(images.samples.col(members[p]));
        }
        stacks.push(Matrix::new(dim, count, data).map_err(Failure::from)?);
    }
    Ok(stacks)
}

fn cmd_classify(args: &ClassifyArgs) -> CliResult {
    let file = load_config(&args.config)?;
    let dir = merged!(args.mnist_dir, &file, "mnist-dir", value_path)
        .ok_or_else(|| Failure::validation("missing --mnist-dir"))?;
    let per_class = merged!(args.per_class, &file, "per-class", value_usize).unwrap_or(500);
    let test_per_class =
        merged!(args.test_per_class, &file, "test-per-class", value_usize).unwrap_or(80);
    let ratio = merged!(args.ratio, &file, "ratio", value_f64).unwrap_or(1.0);
    let rank = merged!(args.rank, &file, "rank", value_usize).unwrap_or(20);
    let seed = merged!(args.seed, &file, "seed", value_u64).unwrap_or(0);
    let out = merged!(args.out, &file, "out", value_path);

    let open = |name: &str| -> Result<PathBuf, Failure> {
        let path = dir.join(name);
        if !path.exists() {
            return Err(Failure::validation(format!(
                "{}: file not found",
                path.display()
            )));
        }
        Ok(path)
    };
    let train_images = idx::read_images_file(&open("train-images-idx3-ubyte")?)
        .map_err(|e| Failure::validation(format!("train-images-idx3-ubyte: {e}")))?;
    let train_labels = idx::read_labels_file(&open("train-labels-idx1-ubyte")?)
        .map_err(|e| Failure::validation(format!("train-labels-idx1-ubyte: {e}")))?;
    let test_images = idx::read_images_file(&open("t10k-images-idx3-ubyte")?)
        .map_err(|e| Failure::validation(format!("t10k-images-idx3-ubyte: {e}")))?;
    let test_labels = idx::read_labels_file(&open("t10k-labels-idx1-ubyte")?)
        .map_err(|e| Failure::validation(format!("t10k-labels-idx1-ubyte: {e}")))?;

    let started = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let train_stacks = sample_classes(&train_images, &train_labels, per_class, &mut rng)?;
    let test_stacks = sample_classes(&test_images, &test_labels, test_per_class, &mut rng)?;

    let model = train_classifier(&train_stacks, ratio, rank)?;

    let dim = test_stacks[0].rows();
    let total_test = test_per_class * 10;
    let mut data = Vec::with_capacity(dim * total_test);
    let mut labels = Vec::with_capacity(total_test);
    for (class, stack) in test_stacks.iter().enumerate() {
        for c in 0..stack.cols() {
            data.extend_from_slice(stack.col(c));
            labels.push(class);
        }
    }
    let test_matrix = Matrix::new(dim, total_test, data).map_err(Failure::from)?;
    let (accuracy, confusion) = accuracy_and_confusion(&model, &test_matrix, &labels)?;
    let elapsed = started.elapsed().as_secs_f64();

    if let Some(out_dir) = &out {
        fs::create_dir_all(out_dir)
            .map_err(|e| Failure::validation(format!("{}: {e}", out_dir.display())))?;
        let mut csv = String::from("true_class");
        for c in 0..confusion.len() {
            csv.push_str(&format!(",pred_{c}"));
        }
        csv.push('\n');
        for (class, row) in confusion.iter().enumerate() {
            csv.push_str(&class.to_string());
            for v in row {
                csv.push_str(&format!(",{v}"));
            }
            csv.push('\n');
        }
        fs::write(out_dir.join("confusion.csv"), csv)?;
    }

    Ok(json!({
        "command": "classify",
        "mnist_dir": dir.display().to_string(),
        "per_class": per_class,
        "test_per_class": test_per_class,
        "ratio": ratio,
        "rank": rank,
        "seed": seed,
        "accuracy": accuracy,
        "accuracy_percent": accuracy * 100.0,
        "total_seconds": elapsed,
    }))
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ReconstructArgs {
    /// Input image (binary PPM, P6).
    input: Option<PathBuf>,
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    oversample: Option<usize>,
    /// row or col.
    #[arg(long)]
    orientation: Option<String>,
    /// Reconstructed PPM path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_reconstruct(args: &ReconstructArgs) -> CliResult {
    let file = load_config(&args.config)?;
    let input = merged!(args.input, &file, "input", value_path)
        .ok_or_else(|| Failure::validation("missing input image path"))?;
    let out = merged!(args.out, &file, "out", value_path)
        .ok_or_else(|| Failure::validation("missing --out image path"))?;
    let components = merged!(args.components, &file, "components", value_usize).unwrap_or(90);
    let oversample = merged!(args.oversample, &file, "oversample", value_usize).unwrap_or(2);
    let orientation = match merged!(args.orientation, &file, "orientation", value_string)
        .unwrap_or_else(|| "row".into())
        .as_str()
    {
        "row" | "row-wise" => Orientation::RowWise,
        "col" | "column" | "column-wise" => Orientation::ColWise,
        other => {
            return Err(Failure::validation(format!(
                "orientation must be row or col, got {other:?}"
            )))
        }
    };

    let image = ppm::read_ppm_file(&input)
        .map_err(|e| Failure::validation(format!("{}: {e}", input.display())))?;
    let (reconstructed, report) =
        geohopca::experiments::reconstruct_image(&image, components, oversample, orientation)?;
    ppm::write_ppm_file(&out, &reconstructed)
        .map_err(|e| Failure::validation(format!("{}: {e}", out.display())))?;
    Ok(json!({
        "command": "reconstruct",
        "input": input.display().to_string(),
        "out": out.display().to_string(),
        "width": image.width,
        "height": image.height,
        "oversample": oversample,
        "report": report,
    }))
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

#[derive(Args)]
struct OracleArgs {
    /// Input tensor or matrix (.npy).
    input: Option<PathBuf>,
    /// Mode to unfold before selecting (default 1).
    #[arg(long)]
    mode: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_oracle(args: &OracleArgs) -> CliResult {
    let file = load_config(&args.config)?;
    let input = merged!(args.input, &file, "input", value_path)
        .ok_or_else(|| Failure::validation("missing input path"))?;
    let k = merged!(args.k, &file, "k", value_usize)
        .ok_or_else(|| Failure::validation("missing --k"))?;
    let rank = merged!(args.rank, &file, "rank", value_usize)
        .ok_or_else(|| Failure::validation("missing --rank"))?;
    let mode = merged!(args.mode, &file, "mode", value_usize).unwrap_or(1);

    let x = read_tensor_checked(&input)?;
    let unfolding = unfold(&x, mode)?;
    let (support, eta, explained) = brute_force_select(&unfolding, k, rank)?;
    Ok(json!({
        "command": "oracle",
        "input": input.display().to_string(),
        "mode": mode,
        "k": k,
        "rank": rank,
        "support": support.indices(),
        "eta": eta,
        "explained_variance": explained,
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Decompose(args) => cmd_decompose(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
        Command::Oracle(args) => cmd_oracle(args),
    };
    match outcome {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            let mut stderr = std::io::stderr();
            let _ = writeln!(stderr, "error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
