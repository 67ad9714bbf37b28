use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gini_mds::data::{
    self, ContaminationMode, ContaminationSpec, Dataset, LabelColumn, SimSpec, StandardizeMode,
};
use gini_mds::embed::{self, EmbedMethod, Embedding, HuberDelta, StressConfig, StressKind};
use gini_mds::eval::{self, EvalReport, DEFAULT_K_NN, DEFAULT_K_TRUST};
use gini_mds::metrics::{pairwise_matrix, GiniParams, Metric};
use gini_mds::tune::{self, NuGrid, DEFAULT_FOLDS};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::output::{coords_csv, prepare_dir, scatter_svg, write_atomic, write_json, Timings};
use crate::{CliError, InputArgs, Standardize};

/// Distance matrices up to this many rows are copied into the manifest.
const MANIFEST_DISTANCE_LIMIT: usize = 50;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricArg {
    Euclidean,
    Gini,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossArg {
    Classical,
    Kruskal,
    Huber,
    Sammon,
    Smacof,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// Target dimension.
    #[arg(long, default_value_t = 2)]
    dims: usize,

    #[arg(long, value_enum, default_value_t = LossArg::Classical)]
    loss: LossArg,

    /// Huber threshold; chosen from multiples of the median distance when omitted.
    #[arg(long)]
    huber_delta: Option<f64>,

    #[arg(long, default_value_t = 300)]
    max_iters: usize,

    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FitArgs {
    fn method(&self) -> EmbedMethod {
        let kind = match self.loss {
            LossArg::Classical => return EmbedMethod::Classical,
            LossArg::Kruskal => StressKind::Kruskal,
            LossArg::Huber => StressKind::Huber,
            LossArg::Sammon => StressKind::Sammon,
            LossArg::Smacof => StressKind::Smacof,
        };
        EmbedMethod::Stress(StressConfig {
            huber_delta: self.huber_delta.map_or(HuberDelta::Auto, HuberDelta::Fixed),
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            seed: self.seed,
            ..StressConfig::new(kind)
        })
    }
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[command(flatten)]
    input: InputArgs,

    #[arg(long, value_enum, default_value_t = MetricArg::Gini)]
    metric: MetricArg,

    /// Gini tail parameter ν > 1; required with `--metric gini`.
    #[arg(long)]
    nu: Option<f64>,

    #[command(flatten)]
    fit: FitArgs,

    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    input: InputArgs,

    /// ν grid as lo:hi:count, evenly spaced.
    #[arg(long, default_value = "1.1:5:30")]
    grid: String,

    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,

    /// Score every ν on all rows instead of cross-validating.
    #[arg(long)]
    no_cv: bool,

    #[command(flatten)]
    fit: FitArgs,

    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Embedding coordinates as written by `embed` or `tune`.
    coords: PathBuf,

    #[arg(long, default_value_t = DEFAULT_K_TRUST)]
    k_trust: usize,

    #[arg(long, default_value_t = DEFAULT_K_NN)]
    k_nn: usize,

    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 20)]
    reps: u64,

    #[arg(long, default_value_t = 2024)]
    seed: u64,

    #[arg(long, default_value_t = 2)]
    dims: usize,

    /// Rows per replication.
    #[arg(long, default_value_t = 500)]
    n: usize,

    /// Outer Sammon/ν rounds.
    #[arg(long, default_value_t = 3)]
    iterations: usize,

    #[arg(long, default_value = "1.1:5:30")]
    grid: String,

    #[arg(long, default_value_t = DEFAULT_K_TRUST)]
    k_trust: usize,

    #[arg(long, default_value_t = DEFAULT_K_NN)]
    k_nn: usize,

    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContaminationArg {
    /// x ← x · factor · σ
    Multiply,
    /// x ← x + factor · σ
    Add,
}

#[derive(Args, Debug)]
pub struct ContaminateArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Share of rows to alter.
    #[arg(long)]
    fraction: f64,

    #[arg(long, default_value_t = 10.0)]
    factor: f64,

    #[arg(long, value_enum, default_value_t = ContaminationArg::Multiply)]
    mode: ContaminationArg,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn parse_grid(spec: &str) -> Result<NuGrid, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::config(format!("--grid expects lo:hi:count, got '{spec}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(NuGrid::linspace(lo, hi, count)?)
}

/// First row is a header unless every cell in it parses as a number.
fn sniff_header(text: &str) -> bool {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    first.split(',').any(|cell| cell.trim().parse::<f64>().is_err())
}

fn load(args: &InputArgs) -> Result<(Dataset, bool), CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", args.input.display())))?;
    let header = if args.header {
        true
    } else if args.no_header {
        false
    } else {
        sniff_header(&text)
    };
    let label = args.labels.as_ref().map(|l| match l.parse::<usize>() {
        Ok(i) => LabelColumn::Index(i),
        Err(_) => LabelColumn::Name(l.clone()),
    });
    let ds = data::parse_csv(&text, header, label.as_ref())?;
    let mode = match args.standardize {
        Standardize::None => return Ok((ds, header)),
        Standardize::Mean => StandardizeMode::MeanUnit,
        Standardize::Median => StandardizeMode::MedianUnit,
    };
    Ok((data::standardize(&ds, mode, false)?, header))
}

fn metric(kind: MetricArg, nu: Option<f64>) -> Result<Metric, CliError> {
    match (kind, nu) {
        (MetricArg::Euclidean, _) => Ok(Metric::Euclidean),
        (MetricArg::Gini, Some(nu)) => Ok(Metric::Gini(GiniParams::new(nu)?)),
        (MetricArg::Gini, None) => Err(CliError::config(
            "--nu is required with --metric gini (use `tune` to choose it)",
        )),
    }
}

fn embedding_summary(emb: &Embedding) -> serde_json::Value {
    json!({
        "method": emb.method,
        "dims": emb.dims(),
        "stress": emb.stress,
        "iterations": emb.iterations,
        "converged": emb.converged,
        "eigenvalues": emb.eigenvalues,
        "clamped_eigenvalues": emb.clamped,
        "negative_eigen_mass": emb.negative_mass,
        "huber_delta": emb.huber_delta,
    })
}

fn write_embedding(dir: &std::path::Path, emb: &Embedding, labels: Option<&[usize]>) -> Result<(), CliError> {
    write_atomic(&dir.join("coords.csv"), coords_csv(&emb.coords).as_bytes())?;
    if emb.dims() <= 2 {
        write_atomic(&dir.join("scatter.svg"), scatter_svg(&emb.coords, labels).as_bytes())?;
    }
    Ok(())
}

pub fn embed(args: &EmbedArgs) -> Result<(), CliError> {
    let metric = metric(args.metric, args.nu)?;
    let method = args.fit.method();
    if let EmbedMethod::Stress(config) = &method {
        config.validate()?;
    }
    let dir = prepare_dir(&args.out_dir)?;
    let mut timings = Timings::default();

    let (ds, _) = timings.time("load", || load(&args.input))?;
    let distances = timings.time("distances", || pairwise_matrix(&ds.x, metric))?;
    let emb = timings.time("embed", || embed::embed(&distances, args.fit.dims, &method))?;
    let kruskal = embed::kruskal_stress(&emb.coords, &distances)?;

    write_embedding(&dir, &emb, ds.labels.as_deref())?;
    let small = ds.n() <= MANIFEST_DISTANCE_LIMIT;
    let manifest = json!({
        "command": "embed",
        "input": args.input.input,
        "n": ds.n(),
        "d": ds.d(),
        "metric": match metric { Metric::Euclidean => "euclidean", Metric::Gini(_) => "gini" },
        "nu": args.nu,
        "embedding": embedding_summary(&emb),
        "kruskal_stress": kruskal,
        "distances": small.then(|| distances.condensed()),
        "seed": args.fit.seed,
        "timings": timings.as_json(),
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(())
}

#[derive(Serialize)]
struct TuneFile<'a> {
    grid: &'a [tune::NuScore],
    nu_star: f64,
    folds: usize,
    seed: u64,
    dims: usize,
    method: embed::Method,
    best: serde_json::Value,
}

pub fn tune(args: &TuneArgs) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid)?;
    let folds = match (args.no_cv, args.folds) {
        (true, _) => 1,
        (false, k) if k >= 2 => k,
        (false, k) => {
            return Err(CliError::config(format!(
                "--folds must be at least 2 (got {k}); pass --no-cv to score on all rows"
            )))
        }
    };
    let method = args.fit.method();
    if let EmbedMethod::Stress(config) = &method {
        config.validate()?;
    }
    let dir = prepare_dir(&args.out_dir)?;
    let mut timings = Timings::default();

    let (ds, _) = timings.time("load", || load(&args.input))?;
    let report = timings.time("tune", || {
        tune::tune_nu(&ds.x, args.fit.dims, &grid, folds, &method, args.fit.seed)
    })?;

    let file = TuneFile {
        grid: &report.per_nu,
        nu_star: report.nu_star,
        folds: report.folds,
        seed: report.seed,
        dims: args.fit.dims,
        method: method.name(),
        best: embedding_summary(&report.best_embedding),
    };
    write_json(&dir.join("tune_report.json"), &file)?;
    write_embedding(&dir, &report.best_embedding, ds.labels.as_deref())?;
    let manifest = json!({
        "command": "tune",
        "input": args.input.input,
        "n": ds.n(),
        "d": ds.d(),
        "grid": args.grid,
        "nu_star": report.nu_star,
        "timings": timings.as_json(),
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(())
}

fn load_coords(path: &std::path::Path) -> Result<gini_mds::DMatrix<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    Ok(data::parse_csv(&text, sniff_header(&text), None)?.x)
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let dir = prepare_dir(&args.out_dir)?;
    let (ds, _) = load(&args.input)?;
    let coords = load_coords(&args.coords)?;
    if coords.nrows() != ds.n() {
        return Err(CliError::data(format!(
            "coordinates have {} rows but the input has {}",
            coords.nrows(),
            ds.n()
        )));
    }
    let report = eval::evaluate(&ds.x, &coords, ds.labels.as_deref(), args.k_trust, args.k_nn)?;
    write_json(&dir.join("eval_report.json"), &report)?;
    Ok(())
}

#[derive(Serialize)]
struct Replication {
    rep: u64,
    nu: f64,
    embedding_nu: f64,
    sammon_stress: f64,
    #[serde(flatten)]
    metrics: EvalReport,
}

fn mean_and_se(values: &[f64]) -> serde_json::Value {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let se = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Some((var / m).sqrt())
    } else {
        None
    };
    json!({ "mean": mean, "std_error": se })
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::config("--reps must be at least 1"));
    }
    let grid = parse_grid(&args.grid)?;
    let dir = prepare_dir(&args.out_dir)?;
    let mut timings = Timings::default();

    let reps = timings.time("simulate", || {
        (0..args.reps)
            .into_par_iter()
            .map(|rep| -> gini_mds::Result<Replication> {
                let spec = SimSpec {
                    n: args.n,
                    ..SimSpec::new(args.seed, rep)
                };
                let raw = data::gen_heavy_tailed(&spec)?;
                let ds = data::standardize(&raw, StandardizeMode::MedianUnit, false)?;
                let fit = tune::alternating_tune(&ds.x, args.dims, args.iterations, &grid, rep)?;
                let metrics = eval::evaluate(
                    &ds.x,
                    &fit.embedding.coords,
                    ds.labels.as_deref(),
                    args.k_trust,
                    args.k_nn,
                )?;
                Ok(Replication {
                    rep,
                    nu: fit.nu,
                    embedding_nu: fit.embedding_nu,
                    sammon_stress: fit.embedding.stress,
                    metrics,
                })
            })
            .collect::<gini_mds::Result<Vec<_>>>()
    })?;

    let mut csv = String::from(
        "rep,nu,embedding_nu,sammon_stress,trustworthiness,nn_agreement,silhouette,pearson,spearman\n",
    );
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:?}"));
    for r in &reps {
        csv.push_str(&format!(
            "{},{:?},{:?},{:?},{:?},{},{},{:?},{:?}\n",
            r.rep,
            r.nu,
            r.embedding_nu,
            r.sammon_stress,
            r.metrics.trustworthiness,
            opt(r.metrics.nn_agreement),
            opt(r.metrics.silhouette),
            r.metrics.pearson,
            r.metrics.spearman,
        ));
    }
    write_atomic(&dir.join("replications.csv"), csv.as_bytes())?;

    let column = |f: fn(&Replication) -> Option<f64>| -> Vec<f64> { reps.iter().filter_map(f).collect() };
    let aggregate = json!({
        "reps": args.reps,
        "seed": args.seed,
        "n": args.n,
        "dims": args.dims,
        "iterations": args.iterations,
        "pearson": mean_and_se(&column(|r| Some(r.metrics.pearson))),
        "spearman": mean_and_se(&column(|r| Some(r.metrics.spearman))),
        "trustworthiness": mean_and_se(&column(|r| Some(r.metrics.trustworthiness))),
        "nn_agreement": mean_and_se(&column(|r| r.metrics.nn_agreement)),
        "silhouette": mean_and_se(&column(|r| r.metrics.silhouette)),
        "nu": mean_and_se(&column(|r| Some(r.nu))),
    });
    write_json(&dir.join("aggregate.json"), &aggregate)?;
    write_json(
        &dir.join("manifest.json"),
        &json!({ "command": "simulate", "timings": timings.as_json() }),
    )?;
    Ok(())
}

pub fn contaminate(args: &ContaminateArgs) -> Result<(), CliError> {
    let dir = prepare_dir(&args.out_dir)?;
    let (ds, header) = load(&args.input)?;
    let spec = ContaminationSpec {
        factor: args.factor,
        mode: match args.mode {
            ContaminationArg::Multiply => ContaminationMode::MultiplyByFactorSigma,
            ContaminationArg::Add => ContaminationMode::AddFactorSigma,
        },
        ..ContaminationSpec::new(args.fraction, args.seed)
    };
    let (out, rows) = data::contaminate(&ds, &spec)?;
    write_atomic(&dir.join("contaminated.csv"), data::to_csv_string(&out, header).as_bytes())?;
    write_json(&dir.join("indices.json"), &json!({ "spec": spec, "rows": rows }))?;
    Ok(())
}
