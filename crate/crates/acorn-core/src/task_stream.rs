//! Task-stream construction for the two continual-learning scenarios.
//!
//! A scenario turns one labeled dataset into a sequence of tasks. Attack
//! classes are distributed disjointly across tasks (evolving attacks). In EA
//! mode the normal rows of each task are a uniform random partition of all
//! normals (stationary benign traffic); in ENA mode the normals are first
//! clustered with mini-batch K-Means and each task takes one cluster, so the
//! benign distribution drifts together with the attacks. Within a task the
//! normals split into a small clean reference set, test normals, and the
//! unlabeled training remainder; the task's attacks split between train and
//! test. All splits are seeded.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LabeledDataset;
use crate::kmeans::{self, KMeansConfig};
use crate::linalg::Matrix;
use crate::rng::{self, standard_normal};

/// One task's data: clean normal reference set, unlabeled contaminated
/// training stream, and a labeled test set.
#[derive(Clone, Debug)]
pub struct TaskBundle {
    pub clean: Matrix,
    pub train: Matrix,
    pub test: Matrix,
    pub test_labels: Vec<u8>,
    pub test_classes: Vec<String>,
    pub attack_classes: BTreeSet<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMode {
    /// Evolving attacks, stationary normals.
    Ea,
    /// Evolving normals and attacks.
    Ena,
}

impl std::fmt::Display for ScenarioMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioMode::Ea => write!(f, "ea"),
            ScenarioMode::Ena => write!(f, "ena"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    pub mode: ScenarioMode,
    pub num_tasks: usize,
    /// Fraction of each task's normals held out as the clean reference set.
    pub clean_fraction: f64,
    /// Fraction of each task's normals and attacks placed in the test set.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            mode: ScenarioMode::Ena,
            num_tasks: 4,
            clean_fraction: 0.1,
            test_fraction: 0.3,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_tasks == 0 {
            return Err(Error::config("num_tasks must be at least 1"));
        }
        if !(self.clean_fraction > 0.0 && self.clean_fraction < 1.0) {
            return Err(Error::config("clean_fraction must lie in (0, 1)"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::config("test_fraction must lie in (0, 1)"));
        }
        if self.clean_fraction + self.test_fraction >= 1.0 {
            return Err(Error::config(
                "clean_fraction + test_fraction must be below 1",
            ));
        }
        Ok(())
    }
}

/// Parameters of the synthetic drifting dataset generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub dims: usize,
    pub num_tasks: usize,
    pub normals_per_task: usize,
    pub attacks_per_task: usize,
    /// Isotropic standard deviation of every cluster.
    pub normal_cluster_spread: f64,
    /// Distance from a task's normal center to its attack cluster.
    pub attack_offset: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            dims: 20,
            num_tasks: 4,
            normals_per_task: 2000,
            attacks_per_task: 500,
            normal_cluster_spread: 0.3,
            attack_offset: 6.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_tasks == 0 || self.normals_per_task == 0 || self.attacks_per_task == 0 {
            return Err(Error::config("synthetic counts must all be at least 1"));
        }
        if self.dims < 6 {
            return Err(Error::config(format!(
                "dims must be at least 6 (got {})",
                self.dims
            )));
        }
        if self.normal_cluster_spread < 0.0 {
            return Err(Error::config("normal_cluster_spread must be nonnegative"));
        }
        if self.attack_offset <= self.normal_cluster_spread {
            return Err(Error::config(
                "attack_offset must exceed normal_cluster_spread",
            ));
        }
        Ok(())
    }
}

/// Split indices of one task, referring to rows of the source dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskPlan {
    pub clean_rows: Vec<usize>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub attack_classes: Vec<String>,
}

/// The full scenario as row-index assignments, kept separate from the
/// gathered matrices so that prepared task directories can be written from
/// the original (unpreprocessed) records.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioPlan {
    pub mode: ScenarioMode,
    pub seed: u64,
    pub tasks: Vec<TaskPlan>,
}

/// Near-equal contiguous chunks: the first `len % m` chunks get one extra.
fn chunk_evenly<T: Clone>(items: &[T], m: usize) -> Vec<Vec<T>> {
    let base = items.len() / m;
    let extra = items.len() % m;
    let mut out = Vec::with_capacity(m);
    let mut offset = 0;
    for i in 0..m {
        let take = base + usize::from(i < extra);
        out.push(items[offset..offset + take].to_vec());
        offset += take;
    }
    out
}

/// Distribute attack classes over `m` tasks: seeded shuffle, then near-equal
/// contiguous chunks (sizes differ by at most one). Deterministic given seed.
pub fn split_attacks(classes: &[String], m: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if m == 0 {
        return Err(Error::config("task count must be at least 1"));
    }
    if classes.len() < m {
        return Err(Error::data(format!(
            "{} attack classes cannot cover {} tasks",
            classes.len(),
            m
        )));
    }
    let mut shuffled = classes.to_vec();
    shuffled.shuffle(&mut rng::stream(seed, "plan-attacks"));
    Ok(chunk_evenly(&shuffled, m))
}

/// Partition normal rows into `m` drift groups by mini-batch K-Means:
/// each row joins the task of its nearest cluster center.
pub fn cluster_normals(normals: &Matrix, m: usize, seed: u64) -> Result<Vec<usize>> {
    if normals.rows() < m {
        return Err(Error::data(format!(
            "{} normal rows cannot form {} clusters",
            normals.rows(),
            m
        )));
    }
    let model = kmeans::fit(
        normals,
        &KMeansConfig::new(m),
        &mut rng::stream(seed, "plan-cluster"),
    )?;
    Ok(normals
        .iter_rows()
        .map(|r| kmeans::nearest_center(&model.centers, r).0)
        .collect())
}

fn fraction_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}

/// Plan a scenario: assign every row of `data` to exactly one split of
/// exactly one task.
pub fn plan_scenario(data: &LabeledDataset, spec: &ScenarioSpec) -> Result<ScenarioPlan> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::data("cannot build a scenario from an empty dataset"));
    }
    let m = spec.num_tasks;

    let normal_rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == 0).collect();
    let attack_rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == 1).collect();

    let mut classes: Vec<String> = attack_rows
        .iter()
        .map(|&i| data.classes[i].clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    classes.sort();
    let class_sets = split_attacks(&classes, m, spec.seed)?;

    // normals → task
    let normal_tasks: Vec<Vec<usize>> = match spec.mode {
        ScenarioMode::Ea => {
            let mut shuffled = normal_rows.clone();
            shuffled.shuffle(&mut rng::stream(spec.seed, "plan-normals-ea"));
            chunk_evenly(&shuffled, m)
        }
        ScenarioMode::Ena => {
            let normals = data.features.select_rows(&normal_rows);
            let assignment = cluster_normals(&normals, m, spec.seed)?;
            let mut groups = vec![Vec::new(); m];
            for (local, &row) in normal_rows.iter().enumerate() {
                groups[assignment[local]].push(row);
            }
            groups
        }
    };

    let mut tasks = Vec::with_capacity(m);
    for (t, class_set) in class_sets.iter().enumerate() {
        let mut rng = rng::stream_indexed(spec.seed, "plan-split", t as u64);

        let mut normals = normal_tasks[t].clone();
        normals.shuffle(&mut rng);
        let n_clean = fraction_count(spec.clean_fraction, normals.len());
        let n_test_norm = fraction_count(spec.test_fraction, normals.len());
        if n_clean == 0 {
            return Err(Error::data(format!("task {t} received zero clean rows")));
        }
        if n_clean + n_test_norm > normals.len() {
            return Err(Error::data(format!(
                "task {t}: clean + test normals exceed the {} available",
                normals.len()
            )));
        }
        let clean_rows = normals[..n_clean].to_vec();
        let test_norm = normals[n_clean..n_clean + n_test_norm].to_vec();
        let train_norm = normals[n_clean + n_test_norm..].to_vec();

        let mut attacks: Vec<usize> = attack_rows
            .iter()
            .copied()
            .filter(|&i| class_set.iter().any(|c| c == &data.classes[i]))
            .collect();
        attacks.shuffle(&mut rng);
        let n_test_atk = fraction_count(spec.test_fraction, attacks.len());
        let test_atk = attacks[..n_test_atk].to_vec();
        let train_atk = attacks[n_test_atk..].to_vec();

        let mut train_rows = train_norm;
        train_rows.extend(train_atk);
        let mut test_rows = test_norm;
        test_rows.extend(test_atk);
        if test_rows.is_empty() {
            return Err(Error::data(format!("task {t} received zero test rows")));
        }

        tasks.push(TaskPlan {
            clean_rows,
            train_rows,
            test_rows,
            attack_classes: class_set.clone(),
        });
    }

    Ok(ScenarioPlan {
        mode: spec.mode,
        seed: spec.seed,
        tasks,
    })
}

/// Materialize a plan into task bundles by gathering rows of `data`.
pub fn bundles_from_plan(data: &LabeledDataset, plan: &ScenarioPlan) -> Vec<TaskBundle> {
    plan.tasks
        .iter()
        .map(|t| TaskBundle {
            clean: data.features.select_rows(&t.clean_rows),
            train: data.features.select_rows(&t.train_rows),
            test: data.features.select_rows(&t.test_rows),
            test_labels: t.test_rows.iter().map(|&i| data.labels[i]).collect(),
            test_classes: t.test_rows.iter().map(|&i| data.classes[i].clone()).collect(),
            attack_classes: t.attack_classes.iter().cloned().collect(),
        })
        .collect()
}

/// Build the task sequence for a scenario in one call.
pub fn build_scenario(data: &LabeledDataset, spec: &ScenarioSpec) -> Result<Vec<TaskBundle>> {
    let plan = plan_scenario(data, spec)?;
    Ok(bundles_from_plan(data, &plan))
}

/// Generate a drifting synthetic dataset.
///
/// Benign traffic drifts along one line: task `i`'s normals form an
/// isotropic Gaussian cluster at `3·spread·i` steps along a fixed diagonal
/// direction spanning the first few dims, so successive tasks occupy
/// successive modes of a shared low-dimensional manifold. Attack class `i`
/// (tagged `atk{i}`) sits `attack_offset` away from that task's normal
/// center inside the plane of the last two dims, at a per-class angle fanned
/// over [10°, 80°]; the plane carries no benign structure, so every attack
/// class displaces off the normal manifold by a comparable amount while
/// distinct classes point in visibly different directions. Byte-identical
/// output for a fixed seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let m = spec.num_tasks;
    let d = spec.dims;
    let n = m * (spec.normals_per_task + spec.attacks_per_task);
    let mut rng = rng::stream(spec.seed, "synth");

    let mut features = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);

    // drift direction: diagonal over the first k dims
    let k = ((d - 2) / 2).clamp(2, 8);
    let drift_step = 3.0 * spec.normal_cluster_spread;
    let unit = 1.0 / (k as f64).sqrt();

    let mut row = 0;
    for t in 0..m {
        let mut center = vec![0.0; d];
        for c in center.iter_mut().take(k) {
            *c = drift_step * t as f64 * unit;
        }

        for _ in 0..spec.normals_per_task {
            let out = features.row_mut(row);
            for (o, c) in out.iter_mut().zip(&center) {
                *o = c + spec.normal_cluster_spread * standard_normal(&mut rng);
            }
            labels.push(0);
            classes.push(String::new());
            row += 1;
        }

        let angle = if m > 1 {
            (10.0 + 70.0 * t as f64 / (m - 1) as f64).to_radians()
        } else {
            45.0f64.to_radians()
        };
        let mut attack_center = center.clone();
        attack_center[d - 2] += spec.attack_offset * angle.cos();
        attack_center[d - 1] += spec.attack_offset * angle.sin();
        for _ in 0..spec.attacks_per_task {
            let out = features.row_mut(row);
            for (o, c) in out.iter_mut().zip(&attack_center) {
                *o = c + spec.normal_cluster_spread * standard_normal(&mut rng);
            }
            labels.push(1);
            classes.push(format!("atk{t}"));
            row += 1;
        }
    }

    Ok(LabeledDataset {
        features,
        labels,
        classes,
    })
}
