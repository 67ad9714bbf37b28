use nalgebra::{DMatrix, SymmetricEigen};

use super::{kruskal_stress, Embedding, Method};
use crate::metrics::DistanceMatrix;
use crate::{Error, Result};

/// Gram matrix `B = -½ H D² H`, with `H = I - 11ᵀ/n`, from squared distances.
pub fn double_center(squared: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = squared.nrows();
    if n == 0 || squared.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "expected a nonempty square matrix, got {}×{}",
            squared.nrows(),
            squared.ncols()
        )));
    }
    crate::check_finite(squared, "squared distance matrix")?;
    let scale = squared.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        if squared[(i, i)].abs() > 1e-12 * scale {
            return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
        }
        for j in (i + 1)..n {
            if squared[(i, j)] < 0.0 {
                return Err(Error::InvalidInput(format!("negative entry at ({i}, {j})")));
            }
            if (squared[(i, j)] - squared[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::InvalidInput(format!("asymmetric at ({i}, {j})")));
            }
        }
    }

    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| squared.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| squared.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (squared[(i, j)] - row_means[i] - col_means[j] + grand)
    });
    // exact symmetry regardless of rounding in the means
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    Ok(b)
}

/// Classical (Torgerson) MDS: top-`p` eigenvectors of the double-centred
/// Gram matrix scaled by the square roots of their eigenvalues.
///
/// Negative eigenvalues, which non-Euclidean inputs such as Gini distances
/// can produce, are clamped to zero. The reported eigenvalues are the
/// pre-clamp values. Each output column is oriented so its largest-magnitude
/// entry is positive.
pub fn classical_mds(distances: &DistanceMatrix, p: usize) -> Result<Embedding> {
    let n = distances.len();
    if n < 2 || p == 0 || p > n - 1 {
        return Err(Error::InvalidInput(format!(
            "target dimension must be in 1..={}, got {p}",
            n.saturating_sub(1)
        )));
    }
    let squared = distances.to_dmatrix().map(|v| v * v);
    if squared.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("squared distances overflow f64".into()));
    }
    let gram = double_center(&squared)?;
    let eigen = SymmetricEigen::try_new(gram, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    if eigen.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("eigensolver produced non-finite values".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .total_cmp(&eigen.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let total_mass: f64 = eigen.eigenvalues.iter().map(|v| v.abs()).sum();
    let negative_mass: f64 = eigen
        .eigenvalues
        .iter()
        .filter(|&&v| v < 0.0)
        .fold(0.0, |acc, v| acc + v.abs());

    let mut coords = DMatrix::zeros(n, p);
    let mut eigenvalues = Vec::with_capacity(p);
    let mut clamped = 0;
    for (c, &k) in order.iter().take(p).enumerate() {
        let lambda = eigen.eigenvalues[k];
        eigenvalues.push(lambda);
        if lambda < 0.0 {
            clamped += 1;
        }
        let scale = lambda.max(0.0).sqrt();
        let column = eigen.eigenvectors.column(k);
        let pivot = column
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
            .0;
        let sign = if column[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[(i, c)] = sign * column[i] * scale;
        }
    }

    let stress = match kruskal_stress(&coords, distances) {
        Ok(s) => s,
        Err(Error::Degenerate(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(Embedding {
        coords,
        method: Method::Classical,
        stress,
        eigenvalues,
        clamped,
        negative_mass: if total_mass > 0.0 { negative_mass / total_mass } else { 0.0 },
        iterations: 0,
        converged: true,
        trace: Vec::new(),
        huber_delta: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{pairwise_matrix, GiniParams, Metric};
    use rand::{Rng, SeedableRng};

    fn unit_square() -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0])
    }

    fn assert_reproduces(coords: &DMatrix<f64>, d: &DistanceMatrix, tol: f64) {
        for i in 0..d.len() {
            for j in 0..d.len() {
                let e = (coords.row(i) - coords.row(j)).norm();
                assert!((e - d.get(i, j)).abs() < tol, "({i},{j}): {e} vs {}", d.get(i, j));
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_gram() {
        let b = double_center(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(b, DMatrix::zeros(3, 3));
    }

    #[test]
    fn two_point_gram() {
        let sq = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0]);
        let b = double_center(&sq).unwrap();
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn gram_rows_sum_to_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(12, 3, |_, _| rng.random_range(-10.0..10.0));
        let d = pairwise_matrix(&x, Metric::Euclidean).unwrap();
        let b = double_center(&d.to_dmatrix().map(|v| v * v)).unwrap();
        let scale = b.amax();
        for i in 0..12 {
            assert!(b.row(i).sum().abs() < 1e-9 * scale);
            assert!(b.column(i).sum().abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let sq = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 5.0, 0.0]);
        assert!(matches!(double_center(&sq), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn unit_square_round_trip() {
        let d = pairwise_matrix(&unit_square(), Metric::Euclidean).unwrap();
        let emb = classical_mds(&d, 2).unwrap();
        assert_reproduces(&emb.coords, &d, 1e-9);
        assert!(emb.stress < 1e-8);
        assert_eq!(emb.clamped, 0);
    }

    #[test]
    fn two_points_on_a_line() {
        let d = DistanceMatrix::from_nested(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let emb = classical_mds(&d, 1).unwrap();
        let mut c: Vec<f64> = emb.coords.iter().copied().collect();
        c.sort_by(f64::total_cmp);
        assert!((c[0] + 1.0).abs() < 1e-12 && (c[1] - 1.0).abs() < 1e-12);
        assert!((emb.eigenvalues[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_out_of_range() {
        let d = DistanceMatrix::from_nested(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(classical_mds(&d, 0), Err(Error::InvalidInput(_))));
        assert!(matches!(classical_mds(&d, 2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn gini_input_clamps_negative_spectrum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let x = DMatrix::from_fn(15, 4, |_, _| rng.random_range(-3.0..3.0));
        let d = pairwise_matrix(&x, Metric::Gini(GiniParams::new(3.0).unwrap())).unwrap();
        let full = d.len() - 1;
        // oracle: the full spectrum straight from the solver
        let b = double_center(&d.to_dmatrix().map(|v| v * v)).unwrap();
        let spectrum = SymmetricEigen::new(b).eigenvalues;
        let negatives = spectrum.iter().filter(|&&v| v < -1e-9).count();
        assert!(negatives > 0, "expected an indefinite Gram matrix");

        let emb = classical_mds(&d, full).unwrap();
        assert!(emb.clamped > 0);
        assert!(emb.negative_mass > 0.0 && emb.negative_mass < 1.0);
        assert!(emb.coords.iter().all(|v| v.is_finite()));
        let clamped_cols = emb.eigenvalues.iter().filter(|&&v| v < 0.0).count();
        assert_eq!(clamped_cols, emb.clamped);
        for (c, &lambda) in emb.eigenvalues.iter().enumerate() {
            if lambda < 0.0 {
                assert!(emb.coords.column(c).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let d = pairwise_matrix(&unit_square(), Metric::Euclidean).unwrap();
        let emb = classical_mds(&d, 2).unwrap();
        for c in 0..2 {
            let col = emb.coords.column(c);
            let pivot = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn relabeling_permutes_rows() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let x = DMatrix::from_fn(9, 3, |_, _| rng.random_range(-2.0..2.0));
        let perm = [4, 0, 7, 1, 8, 2, 6, 3, 5];
        let xp = DMatrix::from_fn(9, 3, |i, j| x[(perm[i], j)]);
        let a = classical_mds(&pairwise_matrix(&x, Metric::Euclidean).unwrap(), 2).unwrap();
        let b = classical_mds(&pairwise_matrix(&xp, Metric::Euclidean).unwrap(), 2).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            for c in 0..2 {
                assert!((b.coords[(i, c)] - a.coords[(p, c)]).abs() < 1e-9);
            }
        }
    }
}
