//! Detection and continual-learning metrics.
//!
//! The score matrix R holds one F1 value per (training task i, test task j)
//! pair. From it come the three aggregates: AVG (mean of the last row),
//! forward transfer (mean of the strict upper triangle — performance on
//! tasks not yet trained on), and backward transfer (mean last-row-minus-
//! diagonal difference — negative values are forgetting). PR-AUC is the
//! threshold-free companion, computed as step-interpolated average
//! precision, which stays honest under heavy class imbalance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// m × m matrix of per-(train, test) task scores; row i is the evaluation
/// pass run after training task i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    num_tasks: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeros(num_tasks: usize) -> Self {
        ScoreMatrix {
            num_tasks,
            values: vec![0.0; num_tasks * num_tasks],
        }
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn get(&self, train_task: usize, test_task: usize) -> f64 {
        self.values[train_task * self.num_tasks + test_task]
    }

    pub fn set(&mut self, train_task: usize, test_task: usize, value: f64) {
        self.values[train_task * self.num_tasks + test_task] = value;
    }

    pub fn last_row(&self) -> &[f64] {
        &self.values[(self.num_tasks - 1) * self.num_tasks..]
    }

    /// CSV with a header row and column of task indices, 6-decimal cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("train_task");
        for j in 0..self.num_tasks {
            out += &format!(",{j}");
        }
        out.push('\n');
        for i in 0..self.num_tasks {
            out += &i.to_string();
            for j in 0..self.num_tasks {
                out += &format!(",{:.6}", self.get(i, j));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            let row: Vec<f64> = cells[1..]
                .iter()
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::data(format!("bad score cell {c:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let m = rows.len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::data("score matrix is not square"));
        }
        let mut matrix = ScoreMatrix::zeros(m);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                matrix.set(i, j, *v);
            }
        }
        Ok(matrix)
    }
}

/// F1 = 2TP / (2TP + FP + FN), with the convention that a zero denominator
/// (nothing predicted positive and nothing positive present) scores 0.
pub fn f1(preds: &[u8], labels: &[u8]) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(Error::data(format!(
            "prediction/label lengths differ: {} vs {}",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::data("cannot score an empty prediction vector"));
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (&p, &l) in preds.iter().zip(labels) {
        match (p != 0, l != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// Mean of the last row: performance on every task after the final
/// training task.
pub fn avg_f1(r: &ScoreMatrix) -> f64 {
    let m = r.num_tasks();
    r.last_row().iter().sum::<f64>() / m as f64
}

/// Mean of the strict upper triangle R_ij with j > i. Zero when m = 1
/// (no future-task pairs exist).
pub fn fwd_transfer(r: &ScoreMatrix) -> f64 {
    let m = r.num_tasks();
    if m < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            sum += r.get(i, j);
        }
    }
    sum / (m * (m - 1) / 2) as f64
}

/// Sum over i of (R_{m,i} − R_{i,i}) divided by m(m−1)/2; the i = m term is
/// identically zero. Zero when m = 1.
pub fn bwd_transfer(r: &ScoreMatrix) -> f64 {
    let m = r.num_tasks();
    if m < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..m {
        sum += r.get(m - 1, i) - r.get(i, i);
    }
    sum / (m * (m - 1) / 2) as f64
}

/// Area under the precision-recall curve by step-interpolated average
/// precision: descending unique score cut points, precision × recall
/// increment at each, ties grouped. Requires at least one positive label.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::data(format!(
            "score/label lengths differ: {} vs {}",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l != 0).count();
    if positives == 0 {
        return Err(Error::data("PR-AUC needs at least one positive label"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::numeric("PR-AUC scores contain non-finite values"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let total_pos = positives as f64;
    let mut auc = 0.0;
    let mut tp = 0u64;
    let mut seen = 0u64;
    let mut prev_recall = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        // advance over the whole tie group
        let cut = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == cut {
            seen += 1;
            if labels[order[idx]] != 0 {
                tp += 1;
            }
            idx += 1;
        }
        let precision = tp as f64 / seen as f64;
        let recall = tp as f64 / total_pos;
        auc += precision * (recall - prev_recall);
        prev_recall = recall;
    }
    Ok(auc)
}
