//! `assc` command-line tool.

mod config;
mod io;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use assc::certificates::{certify, certify_unlabeled, CertifyOptions};
use assc::clustering::{build_affinity, clustering_error, spectral_cluster};
use assc::datagen::{make_toy, random_arrangement, RandomArrangementSpec, ToyId};
use assc::model::{Arrangement, DataMatrix};
use assc::solvers::{
    compute_lambda, solve_column_admm, CoefficientMatrix, ColumnSolution, Mode, SolverConfig, Variant,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use config::{
    Clusters, ColumnFailure, DatasetSource, ExperimentConfig, Outputs, RunReport, SolverSettings, VariantKind,
};

/// Tolerance for deciding that labelled points lie on their fitted subspace.
const FIT_TOL: f64 = 1e-6;
const THREADS_ENV: &str = "ASSC_NUM_THREADS";

#[derive(Parser)]
#[command(name = "assc", version, about = "Affine sparse subspace clustering")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a toy or random dataset as CSV.
    Synth(SynthArgs),
    /// Solve every column, cluster, and write the report.
    Solve(SolveArgs),
    /// Evaluate the correctness certificates for a coefficient matrix.
    Certify(CertifyArgs),
    /// Clustering error only.
    Eval(EvalArgs),
    /// Clustering error over a grid of alpha values (noisy variant).
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Toy dataset id (two-lines-r3, two-lines-r2, triangle-line-r3, triangle-r2, dual-example-r2).
    #[arg(long, conflicts_with = "dims")]
    toy: Option<String>,
    /// Subspace dimensions of a random arrangement, comma separated.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 3)]
    ambient: usize,
    #[arg(long, default_value_t = 10)]
    points_per_cluster: usize,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    /// Reject draws that are not affinely independent.
    #[arg(long)]
    independent: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ssc,
    Assc,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Dataset CSV (one point per row, optional trailing label column).
    #[arg(long, conflicts_with = "toy")]
    data: Option<PathBuf>,
    #[arg(long)]
    toy: Option<String>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "assc")]
    mode: ModeArg,
    /// Use the noisy formulation.
    #[arg(long)]
    noisy: bool,
    #[arg(long)]
    lambda: Option<f64>,
    /// Sets lambda to alpha / min_j max_{i≠j} x_iᵀx_j.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// JSON experiment config; replaces the dataset and solver flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Number of clusters; defaults to the number of labels.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    certify: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_coefficients: Option<PathBuf>,
    #[arg(long)]
    out_affinity: Option<PathBuf>,
    #[arg(long)]
    out_labels: Option<PathBuf>,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Coefficient matrix CSV; solved with exact ASSC when absent.
    #[arg(long)]
    coefficients: Option<PathBuf>,
    /// Skip the exact LP cross-check.
    #[arg(long)]
    no_oracle: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Predicted labels CSV; when absent the pipeline is run.
    #[arg(long)]
    predicted: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "assc")]
    mode: ModeArg,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0])]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV table path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Solver(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn data_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Data(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Cmd::Synth(a) => cmd_synth(&a),
        Cmd::Solve(a) => cmd_solve(&a),
        Cmd::Certify(a) => cmd_certify(&a),
        Cmd::Eval(a) => cmd_eval(&a),
        Cmd::Sweep(a) => cmd_sweep(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Data(e) | Failure::Solver(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV} must be a positive integer"))?;
    if n == 0 {
        anyhow::bail!("{THREADS_ENV} must be a positive integer");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn parse_toy(name: &str) -> Outcome<ToyId> {
    name.parse::<ToyId>().map_err(|e| usage(anyhow!("{e}")))
}

fn load(source: &DatasetSource) -> Outcome<DataMatrix> {
    match source {
        DatasetSource::Toy(name) => Ok(make_toy(parse_toy(name)?).arrangement.data),
        DatasetSource::Csv(p) => io::read_dataset(p).map_err(data_err),
    }
}

fn source_of(d: &DataArgs) -> Outcome<DatasetSource> {
    match (&d.data, &d.toy) {
        (Some(p), None) => Ok(DatasetSource::Csv(p.clone())),
        (None, Some(t)) => Ok(DatasetSource::Toy(t.clone())),
        _ => Err(usage(anyhow!("give exactly one of --data or --toy"))),
    }
}

/// Labelled arrangement: toys carry their subspaces, CSV data is fitted.
fn arrangement(source: &DatasetSource, data: DataMatrix) -> Outcome<Arrangement> {
    if let DatasetSource::Toy(name) = source {
        return Ok(make_toy(parse_toy(name)?).arrangement);
    }
    if data.labels().is_none() {
        return Err(data_err(anyhow!("certification needs a label column")));
    }
    Arrangement::from_labeled_data(data, FIT_TOL).map_err(data_err)
}

fn settings(s: &SolverArgs) -> SolverSettings {
    let mut out = SolverSettings {
        mode: match s.mode {
            ModeArg::Ssc => Mode::Ssc,
            ModeArg::Assc => Mode::Assc,
        },
        variant: if s.noisy { VariantKind::Noisy } else { VariantKind::Exact },
        lambda: s.lambda,
        ..SolverSettings::default()
    };
    if let Some(m) = s.max_iters {
        out.max_iters = m;
    }
    out
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Outcome<()> {
    let text = serde_json::to_string_pretty(value).map_err(data_err)?;
    match path {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display())).map_err(data_err),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_synth(a: &SynthArgs) -> Outcome<()> {
    let data = match (&a.toy, &a.dims) {
        (Some(t), None) => make_toy(parse_toy(t)?).arrangement.data,
        (None, Some(dims)) => {
            let spec = RandomArrangementSpec {
                dims: dims.clone(),
                ambient: a.ambient,
                points_per_cluster: a.points_per_cluster,
                spread: a.spread,
                separation: a.separation,
                force_independent: a.independent,
                seed: a.seed,
            };
            random_arrangement(&spec).map_err(usage)?.data
        }
        _ => return Err(usage(anyhow!("give exactly one of --toy or --dims"))),
    };
    io::write_dataset(&a.out, &data).map_err(data_err)
}

/// Per-column solves; failed columns are left at zero and recorded.
fn solve_all(data: &DataMatrix, cfg: &SolverConfig) -> Outcome<(CoefficientMatrix, Vec<ColumnFailure>)> {
    if data.len() < 2 {
        return Err(data_err(anyhow!("need at least two points")));
    }
    let results: Vec<Result<ColumnSolution, String>> = (0..data.len())
        .into_par_iter()
        .map(|j| solve_column_admm(data, j, cfg).map_err(|e| e.to_string()))
        .collect();
    let mut failures = Vec::new();
    let solutions: Vec<ColumnSolution> = results
        .into_iter()
        .enumerate()
        .map(|(j, r)| {
            r.unwrap_or_else(|error| {
                failures.push(ColumnFailure { j, error });
                ColumnSolution {
                    j,
                    c: vec![0.0; data.len()],
                    objective: 0.0,
                    dual_w: Vec::new(),
                    dual_nu: 0.0,
                    iterations: 0,
                    converged: false,
                    primal_residual: 0.0,
                    dual_residual: 0.0,
                }
            })
        })
        .collect();
    let cm = CoefficientMatrix::from_solutions(&solutions).map_err(|e| Failure::Solver(e.into()))?;
    if cm.stats.iter().all(|s| !s.converged) {
        return Err(Failure::Solver(anyhow!("no column converged")));
    }
    Ok((cm, failures))
}

fn cluster_count(clusters: Clusters, data: &DataMatrix) -> Outcome<usize> {
    match clusters {
        Clusters::Count(n) => Ok(n),
        Clusters::FromLabels if data.labels().is_some() => Ok(data.num_clusters()),
        Clusters::FromLabels => Err(usage(anyhow!("unlabelled data needs --clusters"))),
    }
}

fn cluster(c: &DMatrix<f64>, n: usize, seed: u64) -> Outcome<Vec<usize>> {
    let a = build_affinity(c).map_err(|e| Failure::Solver(e.into()))?;
    Ok(spectral_cluster(&a, n, seed).map_err(|e| Failure::Solver(e.into()))?.labels)
}

fn run_experiment(cfg: &ExperimentConfig) -> Outcome<RunReport> {
    cfg.validate().map_err(usage)?;
    let mut times = BTreeMap::new();
    let data = load(&cfg.source)?;
    let solver = cfg.solver_config(&data).map_err(usage)?;
    let lambda = match solver.variant {
        Variant::Noisy { lambda } => Some(lambda),
        Variant::Exact => None,
    };

    let t = Instant::now();
    let (cm, failures) = solve_all(&data, &solver)?;
    times.insert("solve".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let n = cluster_count(cfg.clusters, &data)?;
    let predicted = cluster(&cm.c, n, cfg.seed)?;
    let error = match data.labels() {
        Some(l) => Some(clustering_error(&predicted, l).map_err(data_err)?),
        None => None,
    };
    times.insert("cluster".into(), t.elapsed().as_secs_f64());

    let certificate = if cfg.certify {
        let t = Instant::now();
        let opts = CertifyOptions { oracle_check: true, clustering_error: error };
        let report = if data.labels().is_some() {
            certify(&arrangement(&cfg.source, data.clone())?, &cm, &opts).map_err(data_err)?
        } else {
            certify_unlabeled(&data, &cm).map_err(data_err)?
        };
        times.insert("certify".into(), t.elapsed().as_secs_f64());
        Some(report)
    } else {
        None
    };

    write_outputs(&cfg.outputs, &cm, &predicted)?;
    Ok(RunReport {
        config: cfg.clone(),
        lambda,
        columns: cm.stats.clone(),
        failures,
        predicted_labels: Some(predicted),
        clustering_error: error,
        certificate,
        wall_times: times,
    })
}

fn write_outputs(out: &Outputs, cm: &CoefficientMatrix, labels: &[usize]) -> Outcome<()> {
    if let Some(p) = &out.coefficients {
        io::write_matrix(p, &cm.c).map_err(data_err)?;
    }
    if let Some(p) = &out.affinity {
        let a = build_affinity(&cm.c).map_err(|e| Failure::Solver(e.into()))?;
        io::write_matrix(p, a.matrix()).map_err(data_err)?;
    }
    if let Some(p) = &out.labels {
        io::write_labels(p, labels).map_err(data_err)?;
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Outcome<()> {
    let cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())).map_err(usage)?;
            serde_json::from_str::<ExperimentConfig>(&text).context("invalid config").map_err(usage)?
        }
        None => ExperimentConfig {
            source: source_of(&a.data)?,
            solver: settings(&a.solver),
            alpha: a.solver.alpha,
            clusters: a.clusters.map_or(Clusters::FromLabels, Clusters::Count),
            outputs: Outputs {
                coefficients: a.out_coefficients.clone(),
                affinity: a.out_affinity.clone(),
                labels: a.out_labels.clone(),
                report: a.report.clone(),
            },
            certify: a.certify,
            seed: a.seed,
        },
    };
    let report = run_experiment(&cfg)?;
    write_json(cfg.outputs.report.as_deref(), &report)
}

fn cmd_certify(a: &CertifyArgs) -> Outcome<()> {
    let source = source_of(&a.data)?;
    let data = load(&source)?;
    let arr = arrangement(&source, data.clone())?;
    let cm = match &a.coefficients {
        Some(p) => {
            let c = io::read_matrix(p).map_err(data_err)?;
            if c.nrows() != data.len() || c.ncols() != data.len() {
                return Err(data_err(anyhow!(
                    "coefficient matrix is {}x{}, data has {} points",
                    c.nrows(),
                    c.ncols(),
                    data.len()
                )));
            }
            from_matrix(c)
        }
        None => solve_all(&data, &SolverConfig::default())?.0,
    };
    let opts = CertifyOptions { oracle_check: !a.no_oracle, clustering_error: None };
    let report = certify(&arr, &cm, &opts).map_err(data_err)?;
    write_json(a.report.as_deref(), &report)
}

/// Coefficient matrix read from disk: statistics are recomputed where they
/// can be and marked unknown otherwise.
fn from_matrix(c: DMatrix<f64>) -> CoefficientMatrix {
    let stats = (0..c.ncols())
        .map(|j| assc::solvers::ColumnStats {
            j,
            objective: c.column(j).lp_norm(1),
            dual_nu: f64::NAN,
            iterations: 0,
            converged: true,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
        })
        .collect();
    CoefficientMatrix { c, stats }
}

#[derive(Serialize)]
struct EvalReport {
    clustering_error: f64,
}

fn cmd_eval(a: &EvalArgs) -> Outcome<()> {
    let source = source_of(&a.data)?;
    let data = load(&source)?;
    let truth = data.labels().ok_or_else(|| data_err(anyhow!("evaluation needs a label column")))?;
    let predicted = match &a.predicted {
        Some(p) => io::read_labels(p).map_err(data_err)?,
        None => {
            let cfg = ExperimentConfig {
                source: source.clone(),
                solver: settings(&a.solver),
                alpha: a.solver.alpha,
                clusters: Clusters::FromLabels,
                outputs: Outputs::default(),
                certify: false,
                seed: a.seed,
            };
            cfg.validate().map_err(usage)?;
            let solver = cfg.solver_config(&data).map_err(usage)?;
            let (cm, _) = solve_all(&data, &solver)?;
            cluster(&cm.c, data.num_clusters(), a.seed)?
        }
    };
    let err = clustering_error(&predicted, truth).map_err(data_err)?;
    write_json(None, &EvalReport { clustering_error: err })
}

fn cmd_sweep(a: &SweepArgs) -> Outcome<()> {
    let source = source_of(&a.data)?;
    let data = load(&source)?;
    let truth = data.labels().ok_or_else(|| data_err(anyhow!("a sweep needs a label column")))?;
    if a.alphas.is_empty() || a.alphas.iter().any(|x| !(*x > 0.0)) {
        return Err(usage(anyhow!("alphas must be positive")));
    }
    let mode = match a.mode {
        ModeArg::Ssc => Mode::Ssc,
        ModeArg::Assc => Mode::Assc,
    };
    let mut table = String::from("alpha,lambda,clustering_error\n");
    for &alpha in &a.alphas {
        let lambda = compute_lambda(&data, alpha).map_err(data_err)?;
        let cfg = SolverConfig { seed: a.seed, ..SolverConfig::new(mode, Variant::Noisy { lambda }) };
        let (cm, _) = solve_all(&data, &cfg)?;
        let pred = cluster(&cm.c, data.num_clusters(), a.seed)?;
        let err = clustering_error(&pred, truth).map_err(data_err)?;
        table.push_str(&format!("{alpha},{lambda},{err}\n"));
    }
    match &a.out {
        Some(p) => fs::write(p, table).with_context(|| format!("cannot write {}", p.display())).map_err(data_err),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}
