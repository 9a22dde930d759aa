//! Mini-batch K-Means.
//!
//! Shared by the pseudo-labeler and the evolving-normal task partitioner.
//! Seeding is k-means++ over the full dataset; updates follow the streaming
//! per-center learning-rate scheme (center += (x − center) / count). Training
//! runs a fixed number of epochs over shuffled mini-batches or stops early
//! once the largest center shift in an epoch falls below the tolerance.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{sq_distance, Matrix};

#[derive(Clone, Debug)]
pub struct KMeansConfig {
    pub k: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        KMeansConfig {
            k,
            batch_size: 1024,
            epochs: 10,
            tol: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KMeansModel {
    /// k × d centers.
    pub centers: Matrix,
    /// Sum of squared distances of every row to its nearest center.
    pub inertia: f64,
}

/// Index of the nearest center and the squared distance to it.
/// Ties break toward the lowest center index.
pub fn nearest_center(centers: &Matrix, row: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter_rows().enumerate() {
        let d = sq_distance(center, row);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

fn kmeans_plus_plus<R: Rng>(data: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = data.rows();
    let mut centers = Matrix::zeros(k, data.cols());
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from_slice(data.row(first));

    let mut dists: Vec<f64> = data
        .iter_rows()
        .map(|r| sq_distance(r, centers.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dists.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // all remaining mass is zero (duplicate data); fall back to uniform
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from_slice(data.row(pick));
        for (i, d) in dists.iter_mut().enumerate() {
            let nd = sq_distance(data.row(i), centers.row(c));
            if nd < *d {
                *d = nd;
            }
        }
    }
    centers
}

pub fn inertia(centers: &Matrix, data: &Matrix) -> f64 {
    data.iter_rows().map(|r| nearest_center(centers, r).1).sum()
}

/// Fit mini-batch K-Means. Deterministic for a fixed RNG.
pub fn fit<R: Rng>(data: &Matrix, cfg: &KMeansConfig, rng: &mut R) -> Result<KMeansModel> {
    let n = data.rows();
    if cfg.k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    if n < cfg.k {
        return Err(Error::data(format!(
            "cannot fit {} clusters on {} rows",
            cfg.k, n
        )));
    }

    let mut centers = kmeans_plus_plus(data, cfg.k, rng);
    let mut counts = vec![0u64; cfg.k];
    let mut indices: Vec<usize> = (0..n).collect();

    for _ in 0..cfg.epochs {
        let snapshot = centers.clone();
        let mut epoch_hits = vec![0u64; cfg.k];
        indices.shuffle(rng);
        for batch in indices.chunks(cfg.batch_size.max(1)) {
            for &i in batch {
                let row = data.row(i);
                let (c, _) = nearest_center(&centers, row);
                counts[c] += 1;
                epoch_hits[c] += 1;
                let lr = 1.0 / counts[c] as f64;
                for (ctr, v) in centers.row_mut(c).iter_mut().zip(row) {
                    *ctr += lr * (v - *ctr);
                }
            }
        }

        // empty-cluster repair: move a center nothing was assigned to onto
        // the data point farthest from its previous position
        for c in 0..cfg.k {
            if epoch_hits[c] == 0 {
                let mut far = 0;
                let mut far_d = -1.0;
                for (i, row) in data.iter_rows().enumerate() {
                    let d = sq_distance(row, centers.row(c));
                    if d > far_d {
                        far_d = d;
                        far = i;
                    }
                }
                centers.row_mut(c).copy_from_slice(data.row(far));
                counts[c] = 1;
            }
        }

        let shift = (0..cfg.k)
            .map(|c| sq_distance(centers.row(c), snapshot.row(c)).sqrt())
            .fold(0.0f64, f64::max);
        if shift < cfg.tol {
            break;
        }
    }

    let inertia = inertia(&centers, data);
    Ok(KMeansModel { centers, inertia })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn blob(center: &[f64], n: usize, jitter: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, "blob");
        (0..n)
            .map(|_| {
                center
                    .iter()
                    .map(|c| c + jitter * (rng.random::<f64>() - 0.5))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_cluster_center_is_mean() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (2 * i) as f64]).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let mut rng = stream(1, "kmeans");
        let model = fit(&data, &KMeansConfig::new(1), &mut rng).unwrap();
        let mean = data.column_means();
        assert!(sq_distance(model.centers.row(0), &mean) < 1e-18);
        // inertia equals total sum of squared deviations from the mean
        let total_ss: f64 = data.iter_rows().map(|r| sq_distance(r, &mean)).sum();
        assert!((model.inertia - total_ss).abs() / total_ss < 1e-9);
    }

    #[test]
    fn separates_two_blobs() {
        let mut rows = blob(&[0.0], 20, 0.2, 3);
        rows.extend(blob(&[10.0], 20, 0.2, 4));
        let data = Matrix::from_rows(&rows).unwrap();
        let mut rng = stream(5, "kmeans");
        let model = fit(&data, &KMeansConfig::new(2), &mut rng).unwrap();
        let mut c: Vec<f64> = model.centers.iter_rows().map(|r| r[0]).collect();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((c[0] - 0.0).abs() < 0.5, "centers {c:?}");
        assert!((c[1] - 10.0).abs() < 0.5, "centers {c:?}");
        assert!(model.inertia < 20.0 * 2.0 * 0.04);
    }

    #[test]
    fn duplicate_points_fit_exactly() {
        let data = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![4.0, 4.0], vec![4.0, 4.0]]).unwrap();
        let mut rng = stream(9, "kmeans");
        let model = fit(&data, &KMeansConfig::new(2), &mut rng).unwrap();
        assert!(model.inertia < 1e-20);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let rows = blob(&[0.0, 0.0], 50, 1.0, 7);
        let data = Matrix::from_rows(&rows).unwrap();
        let a = fit(&data, &KMeansConfig::new(3), &mut stream(42, "kmeans")).unwrap();
        let b = fit(&data, &KMeansConfig::new(3), &mut stream(42, "kmeans")).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.inertia, b.inertia);
    }

    #[test]
    fn rejects_more_clusters_than_rows() {
        let data = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let mut rng = stream(1, "kmeans");
        assert!(fit(&data, &KMeansConfig::new(3), &mut rng).is_err());
    }
}
