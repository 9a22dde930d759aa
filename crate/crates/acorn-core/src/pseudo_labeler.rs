//! Cluster-based pseudo-labeling of the unlabeled stream.
//!
//! The training stream is clustered with mini-batch K-Means; every cluster
//! that is the nearest center of at least one clean reference sample is
//! designated normal, all remaining clusters anomalous, and each training row
//! inherits the designation of its nearest center. K is chosen by the elbow
//! method over an inertia sweep. All distances are squared Euclidean; ties
//! break toward the lowest center index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{self, nearest_center, KMeansConfig};
use crate::linalg::Matrix;
use crate::rng;

/// Fitted cluster centers. Exact duplicate centers produced by degenerate
/// fits are merged, so the rows are pairwise distinct.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Centroids {
    pub centers: Matrix,
    pub inertia: f64,
}

impl Centroids {
    pub fn k(&self) -> usize {
        self.centers.rows()
    }
}

/// Binary pseudo-labels for a training set (0 = normal, 1 = anomalous) plus
/// the per-cluster designation they were derived from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoLabels {
    pub labels: Vec<u8>,
    pub normal_cluster_mask: Vec<bool>,
}

/// Pick K by the elbow method.
///
/// Fits clusters for every k in [k_min, k_max] and returns the interior k
/// maximizing the discrete second difference of the inertia curve,
/// inertia(k−1) − 2·inertia(k) + inertia(k+1). When no interior k has a
/// positive second difference (flat or degenerate curve) the answer is
/// k_min; ties break toward the smallest k.
pub fn elbow_k(data: &Matrix, k_min: usize, k_max: usize, seed: u64) -> Result<usize> {
    if k_min < 1 || k_min >= k_max || k_max > data.rows() {
        return Err(Error::config(format!(
            "invalid elbow range [{k_min}, {k_max}] for {} rows",
            data.rows()
        )));
    }
    let inertias: Vec<f64> = (k_min..=k_max)
        .map(|k| {
            kmeans::fit(
                data,
                &KMeansConfig::new(k),
                &mut rng::stream_indexed(seed, "elbow", k as u64),
            )
            .map(|m| m.inertia)
        })
        .collect::<Result<_>>()?;

    let mut best_k = k_min;
    let mut best_curvature = 0.0;
    for i in 1..inertias.len().saturating_sub(1) {
        let curvature = inertias[i - 1] - 2.0 * inertias[i] + inertias[i + 1];
        if curvature > best_curvature {
            best_curvature = curvature;
            best_k = k_min + i;
        }
    }
    Ok(best_k)
}

/// Fit K centers on the training stream. Deterministic given seed.
pub fn fit_clusters(data: &Matrix, k: usize, seed: u64) -> Result<Centroids> {
    let model = kmeans::fit(data, &KMeansConfig::new(k), &mut rng::stream(seed, "kmeans"))?;
    // merge exact duplicates (possible when the data has < k distinct points)
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    for r in model.centers.iter_rows() {
        if !rows.iter().any(|kept| kept.as_slice() == r) {
            rows.push(r.to_vec());
        }
    }
    Ok(Centroids {
        centers: Matrix::from_rows(&rows).expect("centers share one width"),
        inertia: model.inertia,
    })
}

/// Assign binary pseudo-labels to the training stream.
///
/// Every clean row marks its nearest center as normal; training rows then
/// inherit their nearest center's designation (0 if marked, else 1).
pub fn assign_pseudo_labels(c: &Centroids, train: &Matrix, clean: &Matrix) -> PseudoLabels {
    let mut mask = vec![false; c.k()];
    for row in clean.iter_rows() {
        mask[nearest_center(&c.centers, row).0] = true;
    }
    let labels = train
        .iter_rows()
        .map(|row| u8::from(!mask[nearest_center(&c.centers, row).0]))
        .collect();
    PseudoLabels {
        labels,
        normal_cluster_mask: mask,
    }
}
