//! PCA-based novelty detection.
//!
//! A PCA basis is fit on encoded clean-normal data, keeping the smallest
//! number of components whose cumulative explained variance reaches the
//! target (default 95%). The anomaly score of a sample is its feature
//! reconstruction error: the squared norm of what remains after projecting
//! the centered sample onto the retained subspace and reconstructing —
//! equivalently, the squared distance to the affine subspace
//! mean + span(components). The decision threshold is μ + 2σ of the scores
//! on a held-out clean validation subset; under an approximately Gaussian
//! score distribution that flags roughly 2.3% of benign traffic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, dot, sym_eigen, Matrix};

/// Fitted PCA basis: the mean, the retained principal directions (rows,
/// orthonormal), and their explained-variance ratios in nonincreasing order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    pub components: Matrix,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaBasis {
    pub fn rank(&self) -> usize {
        self.components.rows()
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }
}

/// Decision threshold calibrated from clean validation scores.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Threshold {
    pub mean: f64,
    pub std_dev: f64,
    pub tau: f64,
}

/// Fit a PCA basis on clean rows.
///
/// Centers by the column mean, eigendecomposes the sample covariance, and
/// retains the smallest r whose cumulative explained-variance ratio reaches
/// `variance_target`. All-identical rows produce a rank-0 basis (mean only),
/// for which every fitted row scores 0.
pub fn fit_pca(h: &Matrix, variance_target: f64) -> Result<PcaBasis> {
    if h.rows() < 2 {
        return Err(Error::data(format!(
            "PCA needs at least 2 rows, got {}",
            h.rows()
        )));
    }
    if !(0.0 < variance_target && variance_target <= 1.0) {
        return Err(Error::config("variance target must lie in (0, 1]"));
    }
    let mean = h.column_means();
    let cov = covariance(h, &mean);
    let (eigenvalues, eigenvectors) = sym_eigen(&cov)?;
    let clamped: Vec<f64> = eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total <= 0.0 {
        return Ok(PcaBasis {
            mean,
            components: Matrix::zeros(0, h.cols()),
            explained_variance_ratio: Vec::new(),
        });
    }
    let mut rank = clamped.len();
    let mut cumulative = 0.0;
    for (i, l) in clamped.iter().enumerate() {
        cumulative += l / total;
        if cumulative >= variance_target {
            rank = i + 1;
            break;
        }
    }
    let rows: Vec<Vec<f64>> = (0..rank).map(|i| eigenvectors.row(i).to_vec()).collect();
    Ok(PcaBasis {
        mean,
        components: Matrix::from_rows(&rows)?,
        explained_variance_ratio: clamped[..rank].iter().map(|l| l / total).collect(),
    })
}

/// Feature reconstruction error of every row: project the centered row onto
/// the retained components, reconstruct, and return the squared residual.
pub fn fre_score(basis: &PcaBasis, h: &Matrix) -> Result<Vec<f64>> {
    if h.cols() != basis.dims() {
        return Err(Error::data(format!(
            "scores expect {} columns, got {}",
            basis.dims(),
            h.cols()
        )));
    }
    let r = basis.rank();
    let d = basis.dims();
    let mut scores = Vec::with_capacity(h.rows());
    let mut residual = vec![0.0; d];
    let mut projected = vec![0.0; r];
    for row in h.iter_rows() {
        for (c, (v, m)) in residual.iter_mut().zip(row.iter().zip(&basis.mean)) {
            *c = v - m;
        }
        for (p, comp) in projected.iter_mut().zip(basis.components.iter_rows()) {
            *p = dot(&residual, comp);
        }
        // residual = centered − componentsᵀ·projected, accumulated in place
        for (&p, comp) in projected.iter().zip(basis.components.iter_rows()) {
            for (res, c) in residual.iter_mut().zip(comp) {
                *res -= p * c;
            }
        }
        scores.push(residual.iter().map(|v| v * v).sum());
    }
    Ok(scores)
}

/// Calibrate the decision threshold from validation scores: τ = μ + 2σ with
/// the population (divide-by-n) standard deviation.
pub fn calibrate_threshold(validation_fres: &[f64]) -> Result<Threshold> {
    if validation_fres.is_empty() {
        return Err(Error::data("cannot calibrate a threshold from no scores"));
    }
    let n = validation_fres.len() as f64;
    let mean = validation_fres.iter().sum::<f64>() / n;
    let var = validation_fres.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std_dev = var.sqrt();
    Ok(Threshold {
        mean,
        std_dev,
        tau: mean + 2.0 * std_dev,
    })
}

/// Strictly-greater thresholding; 1 flags an attack.
pub fn classify(scores: &[f64], tau: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s > tau)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream};

    #[test]
    fn line_in_three_dims_is_rank_one() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64;
                vec![1.0 + 2.0 * t, -3.0 * t, 0.5 * t]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let basis = fit_pca(&x, 0.95).unwrap();
        assert_eq!(basis.rank(), 1);
        // component parallel to the direction (2, −3, 0.5)
        let dir = [2.0, -3.0, 0.5];
        let norm = (dir.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let unit: Vec<f64> = dir.iter().map(|v| v / norm).collect();
        let cosine = dot(basis.components.row(0), &unit).abs();
        assert!((cosine - 1.0).abs() < 1e-10, "cosine {cosine}");
    }

    #[test]
    fn isotropic_gaussian_keeps_both_directions() {
        // eigenvalues of the sample covariance are both near 0.5 of the
        // total, so the 95% rule must keep r = 2
        let mut rng = stream(17, "iso");
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| vec![standard_normal(&mut rng), standard_normal(&mut rng)])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let basis = fit_pca(&x, 0.95).unwrap();
        assert_eq!(basis.rank(), 2);
        assert!(basis.explained_variance_ratio[0] < 0.95);
    }

    #[test]
    fn identical_rows_give_rank_zero_and_zero_scores() {
        let x = Matrix::from_rows(&vec![vec![3.0, 1.0, 2.0]; 5]).unwrap();
        let basis = fit_pca(&x, 0.95).unwrap();
        assert_eq!(basis.rank(), 0);
        let scores = fre_score(&basis, &x).unwrap();
        assert!(scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn fit_rejects_single_row() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(fit_pca(&x, 0.95).is_err());
    }

    #[test]
    fn components_are_orthonormal_with_nonincreasing_ratios() {
        let mut rng = stream(18, "ortho");
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| {
                let a = standard_normal(&mut rng) * 3.0;
                let b = standard_normal(&mut rng);
                let c = standard_normal(&mut rng) * 0.3;
                vec![a + b, a - b, c + 0.2 * a, b - c]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let basis = fit_pca(&x, 0.99).unwrap();
        for i in 0..basis.rank() {
            for j in 0..basis.rank() {
                let g = dot(basis.components.row(i), basis.components.row(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-8, "gram[{i}][{j}] = {g}");
            }
        }
        for w in basis.explained_variance_ratio.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    fn axis_basis() -> PcaBasis {
        // points along the x axis: mean (3, 0), single component e_x
        let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, 0.0]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let basis = fit_pca(&x, 0.95).unwrap();
        assert_eq!(basis.rank(), 1);
        basis
    }

    #[test]
    fn score_of_mean_is_zero() {
        let basis = axis_basis();
        let probe = Matrix::from_rows(std::slice::from_ref(&basis.mean)).unwrap();
        let s = fre_score(&basis, &probe).unwrap();
        assert!(s[0].abs() < 1e-20);
    }

    #[test]
    fn in_subspace_displacement_scores_zero() {
        let basis = axis_basis();
        let shifted: Vec<f64> = basis
            .mean
            .iter()
            .zip(basis.components.row(0))
            .map(|(m, c)| m + c)
            .collect();
        let probe = Matrix::from_rows(&[shifted]).unwrap();
        let s = fre_score(&basis, &probe).unwrap();
        assert!(s[0].abs() < 1e-18, "score {}", s[0]);
    }

    #[test]
    fn orthogonal_displacement_scores_squared_norm() {
        let basis = axis_basis();
        let probe =
            Matrix::from_rows(&[vec![basis.mean[0], basis.mean[1] + 3.0]]).unwrap();
        let s = fre_score(&basis, &probe).unwrap();
        assert!((s[0] - 9.0).abs() < 1e-12, "score {}", s[0]);
    }

    #[test]
    fn score_invariant_to_in_span_shifts() {
        let mut rng = stream(19, "span");
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let a = 2.0 * standard_normal(&mut rng);
                vec![a, 0.5 * a + 0.01 * standard_normal(&mut rng), standard_normal(&mut rng) * 0.01]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let basis = fit_pca(&x, 0.9).unwrap();
        assert!(basis.rank() >= 1);
        let probe = vec![0.3, -0.2, 0.9];
        let base =
            fre_score(&basis, &Matrix::from_rows(std::slice::from_ref(&probe)).unwrap()).unwrap()[0];
        for k in 0..basis.rank() {
            let shifted: Vec<f64> = probe
                .iter()
                .zip(basis.components.row(k))
                .map(|(v, c)| v + 7.0 * c)
                .collect();
            let s = fre_score(&basis, &Matrix::from_rows(&[shifted]).unwrap()).unwrap()[0];
            assert!((s - base).abs() < 1e-9, "component {k}: {s} vs {base}");
        }
    }

    #[test]
    fn mean_fit_score_bounded_by_discarded_variance() {
        let mut rng = stream(20, "bound");
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|_| {
                vec![
                    3.0 * standard_normal(&mut rng),
                    1.0 * standard_normal(&mut rng),
                    0.3 * standard_normal(&mut rng),
                    0.1 * standard_normal(&mut rng),
                ]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let basis = fit_pca(&x, 0.9).unwrap();
        let scores = fre_score(&basis, &x).unwrap();
        let mean_score = scores.iter().sum::<f64>() / scores.len() as f64;

        let mean = x.column_means();
        let cov = covariance(&x, &mean);
        let (vals, _) = sym_eigen(&cov).unwrap();
        let discarded: f64 = vals[basis.rank()..].iter().sum();
        assert!(
            mean_score <= discarded + 1e-9,
            "mean score {mean_score} exceeds discarded variance {discarded}"
        );
    }

    #[test]
    fn doubling_inputs_quadruples_scores() {
        let mut rng = stream(21, "scale");
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![2.0 * standard_normal(&mut rng), 0.2 * standard_normal(&mut rng)])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let doubled_rows: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().map(|v| 2.0 * v).collect()).collect();
        let x2 = Matrix::from_rows(&doubled_rows).unwrap();

        let b1 = fit_pca(&x, 0.9).unwrap();
        let b2 = fit_pca(&x2, 0.9).unwrap();
        assert_eq!(b1.rank(), b2.rank());
        let s1 = fre_score(&b1, &x).unwrap();
        let s2 = fre_score(&b2, &x2).unwrap();
        for (a, b) in s1.iter().zip(&s2) {
            assert!((4.0 * a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn threshold_constant_scores() {
        let t = calibrate_threshold(&[0.7, 0.7, 0.7]).unwrap();
        assert!(t.std_dev < 1e-15);
        assert!((t.tau - 0.7).abs() < 1e-12);
    }

    #[test]
    fn threshold_two_point_sample() {
        // population convention: μ = 1, σ = 1, τ = 3
        let t = calibrate_threshold(&[0.0, 2.0]).unwrap();
        assert_eq!(t.mean, 1.0);
        assert_eq!(t.std_dev, 1.0);
        assert_eq!(t.tau, 3.0);
    }

    #[test]
    fn threshold_rejects_empty() {
        assert!(calibrate_threshold(&[]).is_err());
    }

    #[test]
    fn gaussian_exceedance_near_two_point_three_percent() {
        let mut rng = stream(22, "mc");
        let scores: Vec<f64> = (0..100_000)
            .map(|_| 5.0 + standard_normal(&mut rng))
            .collect();
        let t = calibrate_threshold(&scores).unwrap();
        let over = scores.iter().filter(|&&s| s > t.tau).count() as f64 / scores.len() as f64;
        assert!((over - 0.023).abs() < 0.003, "exceedance {over}");
    }

    #[test]
    fn classify_is_strict_and_monotone() {
        let scores = [0.0, 0.5, 1.0, 2.0];
        assert_eq!(classify(&scores, 1.0), vec![0, 0, 0, 1]);
        assert_eq!(classify(&scores, 0.4), vec![0, 1, 1, 1]);
        // raising tau never flips 0 → 1
        let low = classify(&scores, 0.4);
        let high = classify(&scores, 1.5);
        for (l, h) in low.iter().zip(&high) {
            assert!(h <= l);
        }
        // all-zero scores under a positive tau stay normal
        assert_eq!(classify(&[0.0, 0.0], 0.1), vec![0, 0]);
    }
}
