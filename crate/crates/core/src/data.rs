//! Datasets: CSV ingestion, standardization, contamination and synthetic
//! generators.

use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Cauchy, Distribution, LogNormal, Normal, Pareto, StudentT, Weibull};
use serde::Serialize;

use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeMode {
    None,
    /// Subtract the mean, divide by the standard deviation.
    MeanUnit,
    /// Subtract the median, divide by the standard deviation.
    MedianUnit,
}

/// Per-feature transform applied to a dataset; `x_raw = x * scale + center`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardization {
    pub mode: StandardizeMode,
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// n×d features.
    pub x: DMatrix<f64>,
    /// Class indices `0..C`, in order of first appearance.
    pub labels: Option<Vec<usize>>,
    /// Original label text for each class index.
    pub label_names: Option<Vec<String>>,
    pub label_header: Option<String>,
    pub feature_names: Option<Vec<String>>,
    pub standardization: Standardization,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        crate::check_finite(&x, "data matrix")?;
        let d = x.ncols();
        Ok(Self {
            x,
            labels: None,
            label_names: None,
            label_header: None,
            feature_names: None,
            standardization: identity_standardization(d),
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.x.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} rows",
                labels.len(),
                self.x.nrows()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    fn feature_name(&self, j: usize) -> String {
        self.feature_names
            .as_ref()
            .and_then(|names| names.get(j).cloned())
            .unwrap_or_else(|| format!("column {j}"))
    }
}

fn identity_standardization(d: usize) -> Standardization {
    Standardization {
        mode: StandardizeMode::None,
        centers: vec![0.0; d],
        scales: vec![1.0; d],
    }
}

/// Which CSV column, if any, holds class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    /// Zero-based column index.
    Index(usize),
}

pub fn load_csv(path: &Path, has_header: bool, label_column: Option<&LabelColumn>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, has_header, label_column)
}

/// Parses CSV text. Rows are reported 1-based as they appear in the file.
pub fn parse_csv(text: &str, has_header: bool, label_column: Option<&LabelColumn>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: k + 1,
            column: "-".into(),
            message: e.to_string(),
        })?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push((rec.position().map_or(k + 1, |p| p.line() as usize), rec));
    }

    let header = if has_header && !records.is_empty() {
        Some(records.remove(0).1.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };
    if records.is_empty() {
        return Err(Error::Parse {
            row: if has_header { 2 } else { 1 },
            column: "-".into(),
            message: "no data rows".into(),
        });
    }
    let width = header.as_ref().map_or(records[0].1.len(), Vec::len);

    let label_idx = match label_column {
        None => None,
        Some(LabelColumn::Index(i)) => {
            if *i >= width {
                return Err(Error::InvalidConfig(format!(
                    "label column {i} out of range for {width} columns"
                )));
            }
            Some(*i)
        }
        Some(LabelColumn::Name(name)) => {
            let header = header.as_ref().ok_or_else(|| {
                Error::InvalidConfig(format!("label column '{name}' given by name but the file has no header"))
            })?;
            Some(header.iter().position(|h| h == name).ok_or_else(|| {
                Error::InvalidConfig(format!("no column named '{name}'"))
            })?)
        }
    };
    let column_name = |j: usize| {
        header
            .as_ref()
            .map_or_else(|| format!("{}", j + 1), |h| format!("{} ({})", j + 1, h[j]))
    };

    let d = width - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(Error::Parse {
            row: records[0].0,
            column: "-".into(),
            message: "no feature columns".into(),
        });
    }
    let mut values = Vec::with_capacity(records.len() * d);
    let mut label_names: Vec<String> = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(Error::Parse {
                row: *line,
                column: "-".into(),
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == label_idx {
                let id = match label_names.iter().position(|l| l == cell) {
                    Some(id) => id,
                    None => {
                        label_names.push(cell.to_string());
                        label_names.len() - 1
                    }
                };
                labels.push(id);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: *line,
                column: column_name(j),
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: *line,
                    column: column_name(j),
                    message: format!("'{cell}' is not a finite number"),
                });
            }
            values.push(v);
        }
    }

    let n = records.len();
    let x = DMatrix::from_row_slice(n, d, &values);
    let feature_names = header.as_ref().map(|h| {
        h.iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != label_idx)
            .map(|(_, s)| s.clone())
            .collect()
    });
    Ok(Dataset {
        x,
        labels: label_idx.map(|_| labels),
        label_names: label_idx.map(|_| label_names),
        label_header: label_idx.and_then(|j| header.as_ref().map(|h| h[j].clone())),
        feature_names,
        standardization: identity_standardization(d),
    })
}

/// Serializes features (then the label column, if any) as CSV. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn to_csv_string(ds: &Dataset, header: bool) -> String {
    let mut out = String::new();
    if header {
        let mut names: Vec<String> = (0..ds.d())
            .map(|j| {
                ds.feature_names
                    .as_ref()
                    .and_then(|f| f.get(j).cloned())
                    .unwrap_or_else(|| format!("x{}", j + 1))
            })
            .collect();
        if ds.labels.is_some() {
            names.push(ds.label_header.clone().unwrap_or_else(|| "label".into()));
        }
        out.push_str(&names.join(","));
        out.push('\n');
    }
    for i in 0..ds.n() {
        let mut cells: Vec<String> = ds.x.row(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some(labels) = &ds.labels {
            let y = labels[i];
            cells.push(
                ds.label_names
                    .as_ref()
                    .and_then(|names| names.get(y).cloned())
                    .unwrap_or_else(|| y.to_string()),
            );
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(ds: &Dataset, path: &Path, header: bool) -> Result<()> {
    std::fs::write(path, to_csv_string(ds, header))?;
    Ok(())
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
pub(crate) fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

fn column(x: &DMatrix<f64>, j: usize) -> Vec<f64> {
    x.column(j).iter().copied().collect()
}

/// Centres each feature (mean or median) and divides by its standard
/// deviation. Zero-variance features are an error unless `skip_zero_scale`,
/// in which case they are only centred.
pub fn standardize(ds: &Dataset, mode: StandardizeMode, skip_zero_scale: bool) -> Result<Dataset> {
    let d = ds.d();
    let mut out = ds.clone();
    if mode == StandardizeMode::None {
        return Ok(out);
    }
    let mut centers = Vec::with_capacity(d);
    let mut scales = Vec::with_capacity(d);
    for j in 0..d {
        let col = column(&ds.x, j);
        let center = match mode {
            StandardizeMode::MeanUnit => mean(&col),
            StandardizeMode::MedianUnit => median(&col),
            StandardizeMode::None => unreachable!(),
        };
        let mut scale = std_dev(&col);
        if scale.is_nan() || scale <= 0.0 {
            if !skip_zero_scale {
                return Err(Error::Degenerate(format!(
                    "feature '{}' has zero variance",
                    ds.feature_name(j)
                )));
            }
            scale = 1.0;
        }
        for i in 0..ds.n() {
            out.x[(i, j)] = (ds.x[(i, j)] - center) / scale;
        }
        centers.push(center);
        scales.push(scale);
    }
    out.standardization = Standardization { mode, centers, scales };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContaminationMode {
    /// `x ← x · factor · σ_j`
    MultiplyByFactorSigma,
    /// `x ← x + factor · σ_j`
    AddFactorSigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContaminationSpec {
    pub fraction: f64,
    pub factor: f64,
    pub seed: u64,
    pub mode: ContaminationMode,
}

impl ContaminationSpec {
    pub fn new(fraction: f64, seed: u64) -> Self {
        Self {
            fraction,
            factor: 10.0,
            seed,
            mode: ContaminationMode::MultiplyByFactorSigma,
        }
    }
}

/// Number of rows altered for a given fraction.
pub fn contaminated_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).min(n)
}

/// Rescales a seeded random subset of rows by `factor · σ_j` per feature,
/// with `σ_j` taken before contamination. Returns the new dataset and the
/// altered row indices in ascending order.
pub fn contaminate(ds: &Dataset, spec: &ContaminationSpec) -> Result<(Dataset, Vec<usize>)> {
    contaminate_replicate(ds, spec, 0)
}

/// As [`contaminate`], drawing rows from the stream of replication `rep`.
pub fn contaminate_replicate(
    ds: &Dataset,
    spec: &ContaminationSpec,
    rep: u64,
) -> Result<(Dataset, Vec<usize>)> {
    if !(0.0..=1.0).contains(&spec.fraction) {
        return Err(Error::InvalidConfig(format!(
            "contamination fraction must lie in [0, 1], got {}",
            spec.fraction
        )));
    }
    if !spec.factor.is_finite() {
        return Err(Error::InvalidConfig("contamination factor must be finite".into()));
    }
    let n = ds.n();
    let count = contaminated_count(n, spec.fraction);
    let mut rng = rng::stream(spec.seed, Stream::Contamination, rep, 0);
    let mut rows = index::sample(&mut rng, n, count).into_vec();
    rows.sort_unstable();

    let sigmas: Vec<f64> = (0..ds.d()).map(|j| std_dev(&column(&ds.x, j))).collect();
    let mut out = ds.clone();
    for &i in &rows {
        for (j, &sigma) in sigmas.iter().enumerate() {
            let v = &mut out.x[(i, j)];
            *v = match spec.mode {
                ContaminationMode::MultiplyByFactorSigma => *v * (spec.factor * sigma),
                ContaminationMode::AddFactorSigma => *v + spec.factor * sigma,
            };
        }
    }
    Ok((out, rows))
}

/// Marginal distribution of one simulated feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureDist {
    /// Standard normal with a `fraction` of entries redrawn from `N(0, sd²)`.
    ContaminatedNormal { fraction: f64, sd: f64 },
    Cauchy { location: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
    Pareto { shape: f64, minimum: f64 },
    StudentT { dof: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Normal { mean: f64, sd: f64 },
}

impl FeatureDist {
    /// The six heavy-tailed / contaminated features of the simulation study.
    pub fn heavy_tailed_recipe() -> Vec<FeatureDist> {
        vec![
            FeatureDist::ContaminatedNormal { fraction: 0.05, sd: 10.0 },
            FeatureDist::Cauchy { location: 0.0, scale: 1.0 },
            FeatureDist::Weibull { shape: 0.5, scale: 1.0 },
            FeatureDist::Pareto { shape: 2.0, minimum: 1.0 },
            FeatureDist::StudentT { dof: 2.0 },
            FeatureDist::LogNormal { mu: 0.0, sigma: 1.5 },
        ]
    }

    fn sample(&self, n: usize, rng: &mut rng::StreamRng) -> Result<Vec<f64>> {
        let bad = |e: &dyn std::fmt::Display| Error::InvalidParameter(format!("{self:?}: {e}"));
        Ok(match *self {
            FeatureDist::ContaminatedNormal { fraction, sd } => {
                let base = Normal::new(0.0, 1.0).map_err(|e| bad(&e))?;
                let wide = Normal::new(0.0, sd).map_err(|e| bad(&e))?;
                let mut v: Vec<f64> = base.sample_iter(&mut *rng).take(n).collect();
                let outliers = index::sample(rng, n, contaminated_count(n, fraction));
                for i in outliers {
                    v[i] = wide.sample(rng);
                }
                v
            }
            FeatureDist::Cauchy { location, scale } => {
                draw(Cauchy::new(location, scale).map_err(|e| bad(&e))?, n, rng)
            }
            FeatureDist::Weibull { shape, scale } => {
                draw(Weibull::new(scale, shape).map_err(|e| bad(&e))?, n, rng)
            }
            FeatureDist::Pareto { shape, minimum } => {
                draw(Pareto::new(minimum, shape).map_err(|e| bad(&e))?, n, rng)
            }
            FeatureDist::StudentT { dof } => draw(StudentT::new(dof).map_err(|e| bad(&e))?, n, rng),
            FeatureDist::LogNormal { mu, sigma } => {
                draw(LogNormal::new(mu, sigma).map_err(|e| bad(&e))?, n, rng)
            }
            FeatureDist::Normal { mean, sd } => draw(Normal::new(mean, sd).map_err(|e| bad(&e))?, n, rng),
        })
    }
}

fn draw<D: Distribution<f64>>(dist: D, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    dist.sample_iter(rng).take(n).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSpec {
    pub n: usize,
    pub seed: u64,
    /// Replication index; selects an independent random stream.
    pub replication: u64,
    pub recipe: Vec<FeatureDist>,
}

impl SimSpec {
    pub fn new(seed: u64, replication: u64) -> Self {
        Self {
            n: 500,
            seed,
            replication,
            recipe: FeatureDist::heavy_tailed_recipe(),
        }
    }

    pub fn d(&self) -> usize {
        self.recipe.len()
    }
}

/// Draws each column from its own stream and labels rows by whether the
/// first feature exceeds its median.
pub fn gen_heavy_tailed(spec: &SimSpec) -> Result<Dataset> {
    let (n, d) = (spec.n, spec.d());
    if n == 0 || d == 0 {
        return Err(Error::InvalidConfig("simulation needs n >= 1 and at least one feature".into()));
    }
    let mut x = DMatrix::zeros(n, d);
    for (j, dist) in spec.recipe.iter().enumerate() {
        let column = u16::try_from(j).map_err(|_| Error::InvalidConfig("too many features".into()))?;
        let mut rng = rng::stream(spec.seed, Stream::Simulation, spec.replication, column);
        for (i, v) in dist.sample(n, &mut rng)?.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    let first = column(&x, 0);
    let threshold = median(&first);
    let labels = first.iter().map(|&v| usize::from(v > threshold)).collect();
    let mut ds = Dataset::new(x)?.with_labels(labels)?;
    ds.label_names = Some(vec!["0".into(), "1".into()]);
    ds.feature_names = Some((1..=d).map(|j| format!("x{j}")).collect());
    Ok(ds)
}

/// Labelled Gaussian blobs: `classes` centres drawn uniformly in
/// `[-spread, spread]^d`, unit-variance points around each.
pub fn gen_blobs(n: usize, d: usize, classes: usize, spread: f64, seed: u64, replication: u64) -> Result<Dataset> {
    if n == 0 || d == 0 || classes == 0 {
        return Err(Error::InvalidConfig("blobs need n, d and classes >= 1".into()));
    }
    let mut rng = rng::stream(seed, Stream::Synthetic, replication, 0);
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..d).map(|_| rng.random_range(-spread..=spread)).collect())
        .collect();
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let x = DMatrix::from_fn(n, d, |i, j| centres[labels[i]][j]);
    let noise = DMatrix::from_fn(n, d, |_, _| unit.sample(&mut rng));
    let mut ds = Dataset::new(x + noise)?.with_labels(labels)?;
    ds.label_names = Some((0..classes).map(|c| c.to_string()).collect());
    Ok(ds)
}
