use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::stress::median_distance;
use super::{
    classical_mds, kruskal_stress, Embedding, HuberDelta, Layout, Objective, StressConfig,
    StressKind, Weights,
};
use crate::metrics::DistanceMatrix;
use crate::{Error, Result};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const HUBER_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// Minimizes the configured stress objective starting from classical MDS.
///
/// SMACOF iterates Guttman transforms; the other objectives use gradient
/// descent with Armijo backtracking. The returned coordinates never have a
/// higher objective than the classical initialization. Hitting `max_iters`
/// is reported through [`Embedding::converged`], not as an error.
pub fn minimize_stress(
    distances: &DistanceMatrix,
    p: usize,
    config: &StressConfig,
) -> Result<Embedding> {
    config.validate()?;
    let init = classical_mds(distances, p)?;
    match (config.loss, config.huber_delta) {
        (StressKind::Huber, HuberDelta::Auto) => {
            let base = huber_base(distances)?;
            let mut best: Option<(f64, Embedding)> = None;
            for factor in HUBER_GRID {
                let emb = run(distances, &init.coords, config, Some(factor * base))?;
                let ks = kruskal_stress(&emb.coords, distances)?;
                if best.as_ref().is_none_or(|(b, _)| ks < *b) {
                    best = Some((ks, emb));
                }
            }
            Ok(best.expect("nonempty grid").1)
        }
        _ => run(distances, &init.coords, config, None),
    }
}

fn huber_base(distances: &DistanceMatrix) -> Result<f64> {
    let median = median_distance(distances);
    if median > 0.0 {
        return Ok(median);
    }
    let positive: Vec<f64> = distances.condensed().into_iter().filter(|&d| d > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::Degenerate("all target distances are zero".into()));
    }
    Ok(positive.iter().sum::<f64>() / positive.len() as f64)
}

fn run(
    distances: &DistanceMatrix,
    init: &DMatrix<f64>,
    config: &StressConfig,
    delta: Option<f64>,
) -> Result<Embedding> {
    let objective = Objective::new(config.loss, distances, config, delta)?;
    let start = Layout::new(init);
    let start_value = objective.value(&start);
    let layout = separate_coincident(start.clone(), distances, config.seed);

    let outcome = match config.loss {
        StressKind::Smacof => smacof(&objective, layout, config)?,
        _ => gradient_descent(&objective, layout, config),
    };

    let mut trace = Vec::with_capacity(outcome.trace.len() + 1);
    trace.push(start_value);
    trace.extend(outcome.trace);
    let (layout, stress) = if outcome.value <= start_value {
        (outcome.layout, outcome.value)
    } else {
        (start, start_value)
    };
    Ok(Embedding {
        coords: layout.to_dmatrix(),
        method: config.loss.into(),
        stress,
        eigenvalues: Vec::new(),
        clamped: 0,
        negative_mass: 0.0,
        iterations: outcome.iterations,
        converged: outcome.converged,
        trace,
        huber_delta: (config.loss == StressKind::Huber).then_some(objective.delta),
    })
}

struct Outcome {
    layout: Layout,
    value: f64,
    iterations: usize,
    converged: bool,
    /// Objective after each iteration, starting from the (jittered) start.
    trace: Vec<f64>,
}

/// Nudges apart points that share a location although their target distance
/// is positive, since the stress gradient vanishes between them.
fn separate_coincident(mut layout: Layout, distances: &DistanceMatrix, seed: u64) -> Layout {
    let n = layout.n;
    let stuck: Vec<bool> = (0..n)
        .map(|j| (0..j).any(|i| distances.get(i, j) > 0.0 && layout.dist(i, j) == 0.0))
        .collect();
    if !stuck.iter().any(|&s| s) {
        return layout;
    }
    let scale = 1e-6 * distances.max();
    let mut rng = crate::rng::stream(seed, crate::rng::Stream::Jitter, 0, 0);
    for (i, _) in stuck.iter().enumerate().filter(|(_, &s)| s) {
        for c in 0..layout.p {
            layout.data[i * layout.p + c] += scale * rng.random_range(-1.0..1.0);
        }
    }
    layout
}

fn gradient_descent(objective: &Objective, mut layout: Layout, config: &StressConfig) -> Outcome {
    let (mut value, mut grad) = objective.value_and_gradient(&layout);
    let mut trace = vec![value];
    let scale = objective.distances.max().max(f64::MIN_POSITIVE);
    let mut step: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iters {
        if value == 0.0 {
            converged = true;
            break;
        }
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2 == 0.0 || !g2.is_finite() {
            converged = true;
            break;
        }
        let mut t = step.unwrap_or_else(|| scale / g2.sqrt());
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial = layout.clone();
            trial
                .data
                .iter_mut()
                .zip(&grad)
                .for_each(|(x, g)| *x -= t * g);
            let v = objective.value(&trial);
            if v <= value - ARMIJO * t * g2 {
                accepted = Some((trial, v));
                break;
            }
            t *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            converged = true;
            break;
        };
        iterations += 1;
        let decrease = (value - next_value) / value;
        layout = next;
        let (v, g) = objective.value_and_gradient(&layout);
        value = v;
        grad = g;
        trace.push(value);
        step = Some(2.0 * t);
        if decrease < config.rel_tol {
            converged = true;
            break;
        }
    }
    Outcome {
        layout,
        value,
        iterations,
        converged,
        trace,
    }
}

fn smacof(objective: &Objective, mut layout: Layout, config: &StressConfig) -> Result<Outcome> {
    let n = layout.n;
    let pseudo_inverse = match &config.weights {
        Weights::Uniform => None,
        Weights::Matrix(w) => Some(weighted_laplacian_pinv(w, n)?),
    };
    let mut value = objective.value(&layout);
    let mut trace = vec![value];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iters {
        if value == 0.0 {
            converged = true;
            break;
        }
        let next = guttman(objective, &layout, pseudo_inverse.as_ref());
        let next_value = objective.value(&next);
        iterations += 1;
        let decrease = (value - next_value) / value;
        layout = next;
        value = next_value;
        trace.push(value);
        if decrease < config.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(Outcome {
        layout,
        value,
        iterations,
        converged,
        trace,
    })
}

/// `X ← V⁺ B(X) X`; with unit weights `V⁺ B(X) X = B(X) X / n`.
fn guttman(objective: &Objective, layout: &Layout, pinv: Option<&DMatrix<f64>>) -> Layout {
    let (n, p) = (layout.n, layout.p);
    let weight = |i: usize, j: usize| objective.weights.map_or(1.0, |w| w[i * n + j]);
    // rows of B(X) X
    let bx: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = layout.point(i);
            let mut row = vec![0.0; p];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dist = layout.dist(i, j);
                if dist == 0.0 {
                    continue;
                }
                let b = weight(i, j) * objective.distances.get(i, j) / dist;
                let xj = layout.point(j);
                for c in 0..p {
                    row[c] += b * (xi[c] - xj[c]);
                }
            }
            row
        })
        .collect();
    let data = match pinv {
        None => bx.into_iter().flatten().map(|v| v / n as f64).collect(),
        Some(v) => {
            let bx = DMatrix::from_row_iterator(n, p, bx.into_iter().flatten());
            let out = v * bx;
            let mut data = Vec::with_capacity(n * p);
            for i in 0..n {
                data.extend(out.row(i).iter());
            }
            data
        }
    };
    Layout { n, p, data }
}

/// Moore–Penrose inverse of the weight Laplacian `V` via
/// `(V + 11ᵀ)⁻¹ - 11ᵀ/n²`, valid when the weight graph is connected.
fn weighted_laplacian_pinv(w: &[f64], n: usize) -> Result<DMatrix<f64>> {
    let mut v = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let wij = w[i * n + j];
                if wij != w[j * n + i] {
                    return Err(Error::InvalidConfig(format!("weights asymmetric at ({i}, {j})")));
                }
                v[(i, j)] = -wij;
                v[(i, i)] += wij;
            }
        }
    }
    let shifted = v.add_scalar(1.0);
    let inv = shifted.try_inverse().ok_or_else(|| {
        Error::InvalidConfig("weight graph is disconnected; SMACOF update undefined".into())
    })?;
    Ok(inv.add_scalar(-1.0 / (n * n) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::stress_loss;
    use crate::metrics::{pairwise_matrix, Metric};
    use rand::SeedableRng;

    fn random_distances(n: usize, seed: u64) -> DistanceMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 5, |_, _| rng.random_range(-1.0..1.0));
        pairwise_matrix(&x, Metric::Euclidean).unwrap()
    }

    /// Finite-difference gradient oracle, step `h`.
    fn numeric_gradient(objective: &Objective, layout: &Layout, h: f64) -> Vec<f64> {
        (0..layout.data.len())
            .map(|k| {
                let mut plus = layout.clone();
                let mut minus = layout.clone();
                plus.data[k] += h;
                minus.data[k] -= h;
                (objective.value(&plus) - objective.value(&minus)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn euclidean_input_reaches_zero_stress_for_every_kind() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(12, 2, |_, _| rng.random_range(-3.0..3.0));
        let d = pairwise_matrix(&x, Metric::Euclidean).unwrap();
        for kind in [StressKind::Kruskal, StressKind::Huber, StressKind::Sammon, StressKind::Smacof] {
            let emb = minimize_stress(&d, 2, &StressConfig::new(kind)).unwrap();
            assert!(emb.stress < 1e-6, "{kind:?}: {}", emb.stress);
        }
    }

    #[test]
    fn never_worse_than_classical_start() {
        let d = random_distances(15, 4);
        for kind in [StressKind::Kruskal, StressKind::Huber, StressKind::Sammon, StressKind::Smacof] {
            let config = StressConfig::new(kind);
            let start = classical_mds(&d, 2).unwrap();
            let start_loss = stress_loss(kind, &start.coords, &d, &config).unwrap();
            let emb = minimize_stress(&d, 2, &config).unwrap();
            assert!(emb.stress <= start_loss, "{kind:?}");
            assert_eq!(emb.trace[0], start_loss);
            if kind != StressKind::Huber {
                let recomputed = stress_loss(kind, &emb.coords, &d, &config).unwrap();
                assert!((recomputed - emb.stress).abs() <= 1e-12 * emb.stress.max(1.0));
            }
        }
    }

    #[test]
    fn smacof_is_monotone() {
        let d = random_distances(20, 9);
        let emb = minimize_stress(&d, 2, &StressConfig::new(StressKind::Smacof)).unwrap();
        assert!(emb.trace.len() > 2);
        for w in emb.trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn unit_weight_matrix_matches_uniform_path() {
        let d = random_distances(10, 12);
        let uniform = minimize_stress(&d, 2, &StressConfig::new(StressKind::Smacof)).unwrap();
        let weighted = StressConfig {
            weights: Weights::Matrix(vec![1.0; 100]),
            ..StressConfig::new(StressKind::Smacof)
        };
        let w = minimize_stress(&d, 2, &weighted).unwrap();
        assert_eq!(uniform.iterations, w.iterations);
        assert!((uniform.stress - w.stress).abs() < 1e-9 * uniform.stress.max(1.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for seed in 0..20 {
            let d = random_distances(8, 100 + seed);
            let coords = DMatrix::from_fn(8, 2, |_, _| rng.random_range(-1.0..1.0));
            let layout = Layout::new(&coords);
            for kind in [StressKind::Kruskal, StressKind::Huber, StressKind::Sammon, StressKind::Smacof] {
                let config = StressConfig {
                    huber_delta: HuberDelta::Fixed(0.3),
                    ..StressConfig::new(kind)
                };
                let objective = Objective::new(kind, &d, &config, None).unwrap();
                let (_, analytic) = objective.value_and_gradient(&layout);
                let numeric = numeric_gradient(&objective, &layout, 1e-5);
                let num: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum();
                let den: f64 = numeric.iter().map(|b| b * b).sum();
                assert!((num / den).sqrt() < 1e-4, "{kind:?} seed {seed}");
            }
        }
    }

    #[test]
    fn huber_auto_records_delta_from_grid() {
        let d = random_distances(12, 5);
        let emb = minimize_stress(&d, 2, &StressConfig::new(StressKind::Huber)).unwrap();
        let median = median_distance(&d);
        let delta = emb.huber_delta.unwrap();
        assert!(HUBER_GRID.iter().any(|f| (f * median - delta).abs() < 1e-15));
    }

    #[test]
    fn iteration_cap_is_not_an_error() {
        let d = random_distances(20, 1);
        let config = StressConfig {
            max_iters: 1,
            rel_tol: 1e-300,
            ..StressConfig::new(StressKind::Smacof)
        };
        let emb = minimize_stress(&d, 2, &config).unwrap();
        assert_eq!(emb.iterations, 1);
        assert!(!emb.converged);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let d = random_distances(5, 1);
        let bad = [
            StressConfig { max_iters: 0, ..StressConfig::default() },
            StressConfig { rel_tol: 0.0, ..StressConfig::default() },
            StressConfig {
                huber_delta: HuberDelta::Fixed(-1.0),
                ..StressConfig::new(StressKind::Huber)
            },
        ];
        for config in bad {
            assert!(matches!(minimize_stress(&d, 2, &config), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn deterministic() {
        let d = random_distances(16, 77);
        for kind in [StressKind::Kruskal, StressKind::Sammon, StressKind::Smacof] {
            let a = minimize_stress(&d, 2, &StressConfig::new(kind)).unwrap();
            let b = minimize_stress(&d, 2, &StressConfig::new(kind)).unwrap();
            assert_eq!(a, b);
        }
    }
}
