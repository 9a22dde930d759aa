//! Dense row-major matrix and the small amount of linear algebra the
//! pipeline needs: means, covariance, and a symmetric eigensolver.
//!
//! Everything here is f64 and single-threaded. The matrices involved are at
//! most memory-capacity × latent-dim, so a plain Jacobi eigensolver is both
//! adequate and exactly reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::data(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from row slices; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Ok(Matrix::zeros(0, 0));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::data(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// New matrix containing the given rows of `self`, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(indices.len(), self.cols);
        for (k, &i) in indices.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(i));
        }
        out
    }

    /// Vertical concatenation. Column counts must agree (unless one side is
    /// empty with zero columns).
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows == 0 {
            return Ok(other.clone());
        }
        if other.rows == 0 {
            return Ok(self.clone());
        }
        if self.cols != other.cols {
            return Err(Error::data(format!(
                "cannot stack {}x{} onto {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Column means; zero vector for an empty matrix.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        if self.rows == 0 {
            return mean;
        }
        for r in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows as f64;
        for m in &mut mean {
            *m /= n;
        }
        mean
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Squared Euclidean distance.
pub fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Euclidean distance.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    sq_distance(a, b).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample covariance (divide by n−1) of the rows of `x` around `mean`.
pub fn covariance(x: &Matrix, mean: &[f64]) -> Matrix {
    let d = x.cols();
    let n = x.rows();
    let mut cov = Matrix::zeros(d, d);
    if n < 2 {
        return cov;
    }
    let mut centered = vec![0.0; d];
    for row in x.iter_rows() {
        for (c, (v, m)) in centered.iter_mut().zip(row.iter().zip(mean)) {
            *c = v - m;
        }
        // upper triangle only
        for i in 0..d {
            let ci = centered[i];
            let dst = cov.row_mut(i);
            for j in i..d {
                dst[j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    cov
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// the rows of the returned matrix. Each eigenvector is sign-stabilized so
/// that its largest-magnitude coordinate is positive, keeping serialized
/// bases reproducible.
pub fn sym_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let d = a.rows();
    if a.cols() != d {
        return Err(Error::data(format!(
            "sym_eigen needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.all_finite() {
        return Err(Error::numeric("sym_eigen input contains non-finite values"));
    }
    let mut m = a.clone();
    // v starts as identity; accumulates rotations, columns are eigenvectors.
    let mut v = Matrix::zeros(d, d);
    for i in 0..d {
        v.set(i, i, 1.0);
    }

    let frob: f64 = m.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * frob.max(1.0);
    let max_sweeps = 100;

    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                off += m.get(i, j).abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m.get(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..d {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..d {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let evals: Vec<f64> = (0..d).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut values = Vec::with_capacity(d);
    let mut vectors = Matrix::zeros(d, d);
    for (rank, &idx) in order.iter().enumerate() {
        values.push(evals[idx]);
        let mut col: Vec<f64> = (0..d).map(|k| v.get(k, idx)).collect();
        let mut lead = 0;
        for (k, x) in col.iter().enumerate() {
            if x.abs() > col[lead].abs() {
                lead = k;
            }
        }
        if col[lead] < 0.0 {
            for x in &mut col {
                *x = -*x;
            }
        }
        vectors.row_mut(rank).copy_from_slice(&col);
    }
    Ok((values, vectors))
}
