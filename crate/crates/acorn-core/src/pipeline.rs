//! Orchestration of training and evaluation over the task sequence.
//!
//! For each task, in order: merge the normal memory into the incoming clean
//! set and reservoir-update the memory; fit the pseudo-labeler on the
//! current training stream and label it against the merged clean set; merge
//! the train memory into the labeled stream and reservoir-update it; train
//! the feature extractor on the merged stream; encode the merged clean set,
//! refit PCA on it, and calibrate the threshold on a held-out clean
//! validation slice; finally score and classify the test sets of every task.
//! Extractor weights and optimizer state persist across tasks; the novelty
//! model is refit each task.
//!
//! The same harness also runs the two static single-detector baselines
//! (input-space PCA and a plain autoencoder, refit per task on clean data,
//! optionally augmented with the same normal memory) and the four ablation
//! switches used to isolate component contributions.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cfe::{
    self, AdamState, EncoderDecoderParams, StepTrace, TrainHyper,
};
use crate::error::{Error, Result};
use crate::ingest::{apply_preprocessor, fit_preprocessor, Preprocessor, RawDataset};
use crate::kmeans::nearest_center;
use crate::linalg::Matrix;
use crate::memory::{ReplayMemory, ReservoirBuffer, TrainItem};
use crate::metrics::{self, ScoreMatrix};
use crate::novelty::{self, PcaBasis, Threshold};
use crate::pseudo_labeler::{self, Centroids};
use crate::rng;
use crate::task_stream::TaskBundle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    Acorn,
    StaticPca,
    StaticAe,
}

impl std::fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaselineMode::Acorn => write!(f, "acorn"),
            BaselineMode::StaticPca => write!(f, "static_pca"),
            BaselineMode::StaticAe => write!(f, "static_ae"),
        }
    }
}

/// Component-removal switches; only meaningful in acorn mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationSwitches {
    pub no_metric_loss: bool,
    pub no_recon_loss: bool,
    pub no_memories: bool,
    /// Store only rows in the train memory; replayed rows are relabeled by
    /// the current task's pseudo-labeler instead of keeping stored labels.
    pub no_stored_pseudo_labels: bool,
}

impl AblationSwitches {
    pub fn any(&self) -> bool {
        self.no_metric_loss || self.no_recon_loss || self.no_memories || self.no_stored_pseudo_labels
    }
}

/// Feature-extractor hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CfeHyper {
    /// Encoder layer widths; the last entry is the latent width. The decoder
    /// mirrors them.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub margin: f64,
    pub learning_rate: f64,
}

impl Default for CfeHyper {
    fn default() -> Self {
        CfeHyper {
            hidden: vec![256, 512, 256],
            epochs: 20,
            batch_size: 256,
            margin: 0.2,
            learning_rate: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub baseline: BaselineMode,
    pub ablate: AblationSwitches,
    pub memory_capacity: usize,
    /// Whether static baselines get the normal-memory augmentation.
    pub baseline_memory: bool,
    pub elbow_min: usize,
    pub elbow_max: usize,
    pub variance_target: f64,
    /// Fraction of the merged clean set held out for threshold calibration;
    /// PCA is fit on the remainder.
    pub validation_fraction: f64,
    pub cfe: CfeHyper,
    pub dump_scores: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            baseline: BaselineMode::Acorn,
            ablate: AblationSwitches::default(),
            memory_capacity: 10_000,
            baseline_memory: true,
            elbow_min: 2,
            elbow_max: 15,
            variance_target: 0.95,
            validation_fraction: 0.2,
            cfe: CfeHyper::default(),
            dump_scores: false,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ablate.any() && self.baseline != BaselineMode::Acorn {
            return Err(Error::config(
                "ablation switches are only valid in acorn mode",
            ));
        }
        if self.ablate.no_metric_loss && self.ablate.no_recon_loss {
            return Err(Error::config(
                "disabling both losses leaves no training signal",
            ));
        }
        if self.elbow_min < 1 || self.elbow_max < self.elbow_min {
            return Err(Error::config(format!(
                "invalid elbow range [{}, {}]",
                self.elbow_min, self.elbow_max
            )));
        }
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return Err(Error::config("variance_target must lie in (0, 1]"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::config("validation_fraction must lie in (0, 1)"));
        }
        if self.cfe.hidden.is_empty() || self.cfe.hidden.contains(&0) {
            return Err(Error::config("cfe.hidden must list positive layer widths"));
        }
        if self.cfe.batch_size == 0 {
            return Err(Error::config("cfe.batch_size must be at least 1"));
        }
        if self.cfe.margin <= 0.0 {
            return Err(Error::config("cfe.margin must be positive"));
        }
        if !(self.cfe.learning_rate > 0.0 && self.cfe.learning_rate.is_finite()) {
            return Err(Error::config("cfe.learning_rate must be positive and finite"));
        }
        Ok(())
    }
}

/// One task's raw (un-preprocessed) data as it arrives from disk or from the
/// synthetic generator.
#[derive(Clone, Debug)]
pub struct RawTaskData {
    pub clean: RawDataset,
    pub train: RawDataset,
    pub test: RawDataset,
}

/// Per-task manifest record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: usize,
    /// K selected by the elbow sweep (0 for static baselines).
    pub k: usize,
    /// Distinct pseudo-label clusters after merging duplicates.
    pub pseudo_label_clusters: usize,
    pub pca_rank: usize,
    pub threshold: Threshold,
    pub clean_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub merged_clean_rows: usize,
    pub merged_train_rows: usize,
    pub normal_memory_seen: u64,
    pub train_memory_seen: u64,
    pub basis: PcaBasis,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub preprocessor: Preprocessor,
    pub feature_names: Vec<String>,
    pub tasks: Vec<TaskRecord>,
    pub avg_f1: f64,
    pub fwd_transfer: f64,
    pub bwd_transfer: f64,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// One scored test sample for the optional per-sample dump.
#[derive(Clone, Debug, Serialize)]
pub struct ScoredSample {
    pub test_task: usize,
    pub row: usize,
    pub score: f64,
    pub prediction: u8,
    pub label: u8,
}

/// The model left standing after the final task.
#[derive(Clone, Debug)]
pub enum FinalModel {
    Acorn {
        params: EncoderDecoderParams,
        basis: PcaBasis,
        threshold: Threshold,
    },
    StaticPca {
        basis: PcaBasis,
        threshold: Threshold,
    },
    StaticAe {
        params: EncoderDecoderParams,
        threshold: Threshold,
    },
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub scores: ScoreMatrix,
    pub pr_auc: ScoreMatrix,
    pub manifest: RunManifest,
    /// Per-task training traces (empty for the PCA baseline).
    pub loss_traces: Vec<Vec<StepTrace>>,
    /// Per-train-task score dumps when `dump_scores` is set.
    pub score_dumps: Option<Vec<Vec<ScoredSample>>>,
    pub final_model: Option<FinalModel>,
}

/// Fit the preprocessor on task 0 (clean + train) and transform every task.
/// Statistics stay frozen for the rest of the run: a continual system never
/// sees future tasks at fit time.
pub fn preprocess_tasks(
    tasks: &[RawTaskData],
) -> Result<(Preprocessor, Vec<String>, Vec<TaskBundle>)> {
    if tasks.is_empty() {
        return Err(Error::data("scenario has no tasks"));
    }
    let fit_set = tasks[0].clean.concat(&tasks[0].train)?;
    let pre = fit_preprocessor(&fit_set)?;
    let names = pre.feature_names(&tasks[0].clean.numeric_names);

    let mut bundles = Vec::with_capacity(tasks.len());
    for t in tasks {
        let clean = apply_preprocessor(&pre, &t.clean)?;
        let train = apply_preprocessor(&pre, &t.train)?;
        let test = apply_preprocessor(&pre, &t.test)?;
        let attack_classes = test
            .classes
            .iter()
            .filter(|c| !c.is_empty())
            .cloned()
            .collect();
        bundles.push(TaskBundle {
            clean: clean.features,
            train: train.features,
            test: test.features,
            test_labels: test.labels,
            test_classes: test.classes,
            attack_classes,
        });
    }
    Ok((pre, names, bundles))
}

/// Bridge for in-memory scenarios: wrap already-numeric task bundles as raw
/// task data. Train rows are deliberately stripped of labels.
pub fn task_data_from_bundles(
    bundles: &[TaskBundle],
    feature_names: &[String],
) -> Result<Vec<RawTaskData>> {
    bundles
        .iter()
        .map(|b| {
            let blank = |n: usize| (vec![0u8; n], vec![String::new(); n]);
            let (cl, cc) = blank(b.clean.rows());
            let (tl, tc) = blank(b.train.rows());
            Ok(RawTaskData {
                clean: RawDataset::from_numeric(feature_names.to_vec(), &b.clean, &cl, &cc)?,
                train: RawDataset::from_numeric(feature_names.to_vec(), &b.train, &tl, &tc)?,
                test: RawDataset::from_numeric(
                    feature_names.to_vec(),
                    &b.test,
                    &b.test_labels,
                    &b.test_classes,
                )?,
            })
        })
        .collect()
}

fn split_validation(
    n: usize,
    fraction: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let n_val = ((fraction * n as f64).round() as usize).max(1);
    if n < n_val + 2 {
        return Err(Error::data(format!(
            "clean set of {n} rows is too small to split off a validation slice"
        )));
    }
    let val = order[..n_val].to_vec();
    let fit = order[n_val..].to_vec();
    Ok((fit, val))
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(|r| r.to_vec()).collect()
}

/// Per-row mean squared reconstruction error in input space (the plain
/// autoencoder baseline's anomaly score).
pub fn ae_scores(params: &EncoderDecoderParams, x: &Matrix) -> Result<Vec<f64>> {
    let xhat = cfe::decode(params, &cfe::encode(params, x)?)?;
    let d = x.cols().max(1) as f64;
    Ok(x
        .iter_rows()
        .zip(xhat.iter_rows())
        .map(|(a, b)| crate::linalg::sq_distance(a, b) / d)
        .collect())
}

struct EvalPass<'a> {
    scores: &'a mut ScoreMatrix,
    pr_auc: &'a mut ScoreMatrix,
    dumps: Option<&'a mut Vec<Vec<ScoredSample>>>,
}

fn evaluate_all_tasks<F>(
    train_task: usize,
    bundles: &[TaskBundle],
    score_fn: F,
    tau: f64,
    pass: EvalPass<'_>,
) -> Result<()>
where
    F: Fn(&Matrix) -> Result<Vec<f64>>,
{
    let mut dump_rows = Vec::new();
    for (j, bundle) in bundles.iter().enumerate() {
        let scores = score_fn(&bundle.test)
            .map_err(|e| Error::data(format!("scoring test task {j}: {e}")))?;
        let preds = novelty::classify(&scores, tau);
        let f1 = metrics::f1(&preds, &bundle.test_labels)?;
        let auc = metrics::pr_auc(&scores, &bundle.test_labels)
            .map_err(|e| Error::data(format!("PR-AUC on test task {j}: {e}")))?;
        pass.scores.set(train_task, j, f1);
        pass.pr_auc.set(train_task, j, auc);
        if pass.dumps.is_some() {
            for (row, ((&s, &p), &l)) in scores
                .iter()
                .zip(&preds)
                .zip(&bundle.test_labels)
                .enumerate()
            {
                dump_rows.push(ScoredSample {
                    test_task: j,
                    row,
                    score: s,
                    prediction: p,
                    label: l,
                });
            }
        }
    }
    if let Some(dumps) = pass.dumps {
        dumps.push(dump_rows);
    }
    Ok(())
}

fn pseudo_label_k(cfg: &RunConfig, train: &Matrix, task: usize) -> Result<usize> {
    let n = train.rows();
    if n == 0 {
        return Err(Error::data(format!("task {task} has an empty training stream")));
    }
    let k_max = cfg.elbow_max.min(n);
    let k_min = cfg.elbow_min.min(k_max);
    if k_min < k_max {
        pseudo_labeler::elbow_k(train, k_min, k_max, rng::indexed_seed(cfg.seed, "elbow", task as u64))
    } else {
        Ok(k_min)
    }
}

/// Run the full continual pipeline over preprocessed task bundles.
pub fn run_acorn(
    cfg: &RunConfig,
    bundles: &[TaskBundle],
    preprocessor: Preprocessor,
    feature_names: Vec<String>,
) -> Result<RunOutput> {
    let m = bundles.len();
    let input_dim = bundles[0].clean.cols();
    let mut params = EncoderDecoderParams::new(
        input_dim,
        &cfg.cfe.hidden,
        &mut rng::stream(cfg.seed, "init"),
    )?;
    let mut opt = AdamState::new(&params, cfg.cfe.learning_rate);
    let mut normal_memory: ReservoirBuffer<Vec<f64>> =
        ReservoirBuffer::new(cfg.memory_capacity, rng::stream_seed(cfg.seed, "reservoir-normal"));
    let mut train_memory: ReservoirBuffer<TrainItem> =
        ReservoirBuffer::new(cfg.memory_capacity, rng::stream_seed(cfg.seed, "reservoir-train"));

    let mut scores = ScoreMatrix::zeros(m);
    let mut pr_auc = ScoreMatrix::zeros(m);
    let mut records = Vec::with_capacity(m);
    let mut traces = Vec::with_capacity(m);
    let mut dumps = cfg.dump_scores.then(Vec::new);
    let mut final_model = None;

    for (i, bundle) in bundles.iter().enumerate() {
        // normal memory: merge first, then reservoir-update with the merged set
        let incoming_clean = rows_of(&bundle.clean);
        let merged_clean_rows = if cfg.ablate.no_memories {
            incoming_clean
        } else {
            let merged = normal_memory.merge_with(&incoming_clean);
            normal_memory.offer_all(merged.iter().cloned());
            merged
        };
        let merged_clean = Matrix::from_rows(&merged_clean_rows)?;

        // pseudo-labeler fits on the current stream only
        let k = pseudo_label_k(cfg, &bundle.train, i)?;
        let centroids =
            pseudo_labeler::fit_clusters(&bundle.train, k, rng::indexed_seed(cfg.seed, "pl-fit", i as u64))?;
        let pl = pseudo_labeler::assign_pseudo_labels(&centroids, &bundle.train, &merged_clean);

        // train memory: merge first, then reservoir-update with the merged set
        let stored_label = |l: u8| (!cfg.ablate.no_stored_pseudo_labels).then_some(l);
        let current_items: Vec<TrainItem> = bundle
            .train
            .iter_rows()
            .zip(&pl.labels)
            .map(|(row, &l)| TrainItem {
                row: row.to_vec(),
                label: stored_label(l),
            })
            .collect();
        let merged_items = if cfg.ablate.no_memories {
            current_items
        } else {
            let merged = train_memory.merge_with(&current_items);
            train_memory.offer_all(merged.iter().cloned());
            merged
        };

        let relabel = |c: &Centroids, row: &[f64]| -> u8 {
            u8::from(!pl.normal_cluster_mask[nearest_center(&c.centers, row).0])
        };
        let train_rows: Vec<Vec<f64>> = merged_items.iter().map(|it| it.row.clone()).collect();
        let train_labels: Vec<u8> = merged_items
            .iter()
            .map(|it| it.label.unwrap_or_else(|| relabel(&centroids, &it.row)))
            .collect();
        let train_matrix = Matrix::from_rows(&train_rows)?;

        let hyper = TrainHyper {
            epochs: cfg.cfe.epochs,
            batch_size: cfg.cfe.batch_size,
            margin: cfg.cfe.margin,
            use_metric_loss: !cfg.ablate.no_metric_loss,
            use_recon_loss: !cfg.ablate.no_recon_loss,
        };
        let trace = cfe::train_epochs(
            &mut params,
            &mut opt,
            &train_matrix,
            &train_labels,
            &hyper,
            &mut rng::stream_indexed(cfg.seed, "cfe-shuffle", i as u64),
            &mut rng::stream_indexed(cfg.seed, "mining", i as u64),
        )
        .map_err(|e| Error::numeric(format!("task {i}: {e}")))?;

        // novelty model refit on the encoded merged clean set
        let h_clean = cfe::encode(&params, &merged_clean)?;
        let (fit_idx, val_idx) = split_validation(
            h_clean.rows(),
            cfg.validation_fraction,
            &mut rng::stream_indexed(cfg.seed, "clean-val", i as u64),
        )?;
        let basis = novelty::fit_pca(&h_clean.select_rows(&fit_idx), cfg.variance_target)?;
        let val_fres = novelty::fre_score(&basis, &h_clean.select_rows(&val_idx))?;
        let threshold = novelty::calibrate_threshold(&val_fres)?;

        evaluate_all_tasks(
            i,
            bundles,
            |x| novelty::fre_score(&basis, &cfe::encode(&params, x)?),
            threshold.tau,
            EvalPass {
                scores: &mut scores,
                pr_auc: &mut pr_auc,
                dumps: dumps.as_mut(),
            },
        )?;

        records.push(TaskRecord {
            task: i,
            k,
            pseudo_label_clusters: centroids.k(),
            pca_rank: basis.rank(),
            threshold,
            clean_rows: bundle.clean.rows(),
            train_rows: bundle.train.rows(),
            test_rows: bundle.test.rows(),
            merged_clean_rows: merged_clean.rows(),
            merged_train_rows: train_matrix.rows(),
            normal_memory_seen: normal_memory.seen(),
            train_memory_seen: train_memory.seen(),
            basis: basis.clone(),
        });
        traces.push(trace);
        if i + 1 == m {
            final_model = Some(FinalModel::Acorn {
                params: params.clone(),
                basis,
                threshold,
            });
        }
    }

    let manifest = RunManifest {
        config: cfg.clone(),
        preprocessor,
        feature_names,
        tasks: records,
        avg_f1: metrics::avg_f1(&scores),
        fwd_transfer: metrics::fwd_transfer(&scores),
        bwd_transfer: metrics::bwd_transfer(&scores),
    };
    Ok(RunOutput {
        scores,
        pr_auc,
        manifest,
        loss_traces: traces,
        score_dumps: dumps,
        final_model,
    })
}

/// Run a static single-detector baseline: refit per task on the current
/// clean set (augmented with the reservoir normal memory when enabled),
/// thresholded by the same μ + 2σ procedure.
pub fn run_static_baseline(
    cfg: &RunConfig,
    bundles: &[TaskBundle],
    preprocessor: Preprocessor,
    feature_names: Vec<String>,
) -> Result<RunOutput> {
    let m = bundles.len();
    let mut normal_memory: ReservoirBuffer<Vec<f64>> =
        ReservoirBuffer::new(cfg.memory_capacity, rng::stream_seed(cfg.seed, "reservoir-normal"));

    let mut scores = ScoreMatrix::zeros(m);
    let mut pr_auc = ScoreMatrix::zeros(m);
    let mut records = Vec::with_capacity(m);
    let mut traces = Vec::with_capacity(m);
    let mut dumps = cfg.dump_scores.then(Vec::new);
    let mut final_model = None;

    for (i, bundle) in bundles.iter().enumerate() {
        let incoming_clean = rows_of(&bundle.clean);
        let merged_clean_rows = if cfg.baseline_memory {
            let merged = normal_memory.merge_with(&incoming_clean);
            normal_memory.offer_all(merged.iter().cloned());
            merged
        } else {
            incoming_clean
        };
        let merged_clean = Matrix::from_rows(&merged_clean_rows)?;
        let (fit_idx, val_idx) = split_validation(
            merged_clean.rows(),
            cfg.validation_fraction,
            &mut rng::stream_indexed(cfg.seed, "clean-val", i as u64),
        )?;
        let clean_fit = merged_clean.select_rows(&fit_idx);
        let clean_val = merged_clean.select_rows(&val_idx);

        let (threshold, rank, basis_record, trace) = match cfg.baseline {
            BaselineMode::StaticPca => {
                let basis = novelty::fit_pca(&clean_fit, cfg.variance_target)?;
                let threshold =
                    novelty::calibrate_threshold(&novelty::fre_score(&basis, &clean_val)?)?;
                evaluate_all_tasks(
                    i,
                    bundles,
                    |x| novelty::fre_score(&basis, x),
                    threshold.tau,
                    EvalPass {
                        scores: &mut scores,
                        pr_auc: &mut pr_auc,
                        dumps: dumps.as_mut(),
                    },
                )?;
                if i + 1 == m {
                    final_model = Some(FinalModel::StaticPca {
                        basis: basis.clone(),
                        threshold,
                    });
                }
                (threshold, basis.rank(), basis, Vec::new())
            }
            BaselineMode::StaticAe => {
                // fresh autoencoder per task, trained on clean data only
                let mut params = EncoderDecoderParams::new(
                    clean_fit.cols(),
                    &cfg.cfe.hidden,
                    &mut rng::stream_indexed(cfg.seed, "init-static", i as u64),
                )?;
                let mut opt = AdamState::new(&params, cfg.cfe.learning_rate);
                let hyper = TrainHyper {
                    epochs: cfg.cfe.epochs,
                    batch_size: cfg.cfe.batch_size,
                    margin: cfg.cfe.margin,
                    use_metric_loss: false,
                    use_recon_loss: true,
                };
                let labels = vec![0u8; clean_fit.rows()];
                let trace = cfe::train_epochs(
                    &mut params,
                    &mut opt,
                    &clean_fit,
                    &labels,
                    &hyper,
                    &mut rng::stream_indexed(cfg.seed, "cfe-shuffle", i as u64),
                    &mut rng::stream_indexed(cfg.seed, "mining", i as u64),
                )
                .map_err(|e| Error::numeric(format!("task {i}: {e}")))?;
                let threshold = novelty::calibrate_threshold(&ae_scores(&params, &clean_val)?)?;
                evaluate_all_tasks(
                    i,
                    bundles,
                    |x| ae_scores(&params, x),
                    threshold.tau,
                    EvalPass {
                        scores: &mut scores,
                        pr_auc: &mut pr_auc,
                        dumps: dumps.as_mut(),
                    },
                )?;
                let empty_basis = PcaBasis {
                    mean: vec![0.0; clean_fit.cols()],
                    components: Matrix::zeros(0, clean_fit.cols()),
                    explained_variance_ratio: Vec::new(),
                };
                if i + 1 == m {
                    final_model = Some(FinalModel::StaticAe {
                        params: params.clone(),
                        threshold,
                    });
                }
                (threshold, 0, empty_basis, trace)
            }
            BaselineMode::Acorn => unreachable!("dispatched in run_scenario"),
        };

        records.push(TaskRecord {
            task: i,
            k: 0,
            pseudo_label_clusters: 0,
            pca_rank: rank,
            threshold,
            clean_rows: bundle.clean.rows(),
            train_rows: bundle.train.rows(),
            test_rows: bundle.test.rows(),
            merged_clean_rows: merged_clean.rows(),
            merged_train_rows: 0,
            normal_memory_seen: normal_memory.seen(),
            train_memory_seen: 0,
            basis: basis_record,
        });
        traces.push(trace);
    }

    let manifest = RunManifest {
        config: cfg.clone(),
        preprocessor,
        feature_names,
        tasks: records,
        avg_f1: metrics::avg_f1(&scores),
        fwd_transfer: metrics::fwd_transfer(&scores),
        bwd_transfer: metrics::bwd_transfer(&scores),
    };
    Ok(RunOutput {
        scores,
        pr_auc,
        manifest,
        loss_traces: traces,
        score_dumps: dumps,
        final_model,
    })
}

/// Preprocess raw task data and run the configured mode end to end.
pub fn run_scenario(cfg: &RunConfig, tasks: &[RawTaskData]) -> Result<RunOutput> {
    cfg.validate()?;
    let (preprocessor, feature_names, bundles) = preprocess_tasks(tasks)?;
    match cfg.baseline {
        BaselineMode::Acorn => run_acorn(cfg, &bundles, preprocessor, feature_names),
        BaselineMode::StaticPca | BaselineMode::StaticAe => {
            run_static_baseline(cfg, &bundles, preprocessor, feature_names)
        }
    }
}

/// Write per-sample scores as CSV (test task, row, score, prediction, label).
pub fn write_score_dump_csv(path: &std::path::Path, samples: &[ScoredSample]) -> Result<()> {
    let mut out = String::from("test_task,row,score,prediction,label\n");
    for s in samples {
        out += &format!(
            "{},{},{:.9},{},{}\n",
            s.test_task, s.row, s.score, s.prediction, s.label
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Wall-clock per-sample inference cost.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InferenceTiming {
    pub per_sample_seconds: f64,
    pub samples: usize,
    pub repeats: usize,
}

fn time_scoring<F: Fn() -> f64>(samples: usize, repeats: usize, run: F) -> InferenceTiming {
    let mut best = f64::INFINITY;
    std::hint::black_box(run()); // warm up
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        std::hint::black_box(run());
        let elapsed = start.elapsed().as_secs_f64();
        best = best.min(elapsed / samples.max(1) as f64);
    }
    InferenceTiming {
        per_sample_seconds: best,
        samples,
        repeats,
    }
}

/// Time encode + score + threshold per sample for the final model.
pub fn time_model_inference(model: &FinalModel, x: &Matrix, repeats: usize) -> Result<InferenceTiming> {
    let timing = match model {
        FinalModel::Acorn { params, basis, threshold } => time_scoring(x.rows(), repeats, || {
            let h = cfe::encode(params, x).expect("dims fixed");
            let s = novelty::fre_score(basis, &h).expect("dims fixed");
            novelty::classify(&s, threshold.tau).iter().map(|&p| p as f64).sum()
        }),
        FinalModel::StaticPca { basis, threshold } => time_scoring(x.rows(), repeats, || {
            let s = novelty::fre_score(basis, x).expect("dims fixed");
            novelty::classify(&s, threshold.tau).iter().map(|&p| p as f64).sum()
        }),
        FinalModel::StaticAe { params, threshold } => time_scoring(x.rows(), repeats, || {
            let s = ae_scores(params, x).expect("dims fixed");
            novelty::classify(&s, threshold.tau).iter().map(|&p| p as f64).sum()
        }),
    };
    Ok(timing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task_stream::{build_scenario, generate_synthetic, ScenarioMode, ScenarioSpec, SyntheticSpec};

    fn small_cfg(seed: u64) -> RunConfig {
        RunConfig {
            cfe: CfeHyper {
                hidden: vec![16, 8],
                epochs: 8,
                batch_size: 64,
                ..Default::default()
            },
            elbow_min: 2,
            elbow_max: 6,
            seed,
            ..Default::default()
        }
    }

    fn single_task_data() -> Vec<RawTaskData> {
        let spec = SyntheticSpec {
            dims: 8,
            num_tasks: 1,
            normals_per_task: 600,
            attacks_per_task: 150,
            normal_cluster_spread: 0.25,
            attack_offset: 6.0,
            seed: 31,
        };
        let data = generate_synthetic(&spec).unwrap();
        let scenario = ScenarioSpec {
            mode: ScenarioMode::Ena,
            num_tasks: 1,
            seed: 31,
            ..Default::default()
        };
        let bundles = build_scenario(&data, &scenario).unwrap();
        let names: Vec<String> = (0..8).map(|i| format!("f{i}")).collect();
        task_data_from_bundles(&bundles, &names).unwrap()
    }

    #[test]
    fn config_validation_rejects_conflicts() {
        let cfg = RunConfig {
            ablate: AblationSwitches {
                no_metric_loss: true,
                no_recon_loss: true,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(cfg.validate().is_err());

        let cfg = RunConfig {
            baseline: BaselineMode::StaticPca,
            ablate: AblationSwitches {
                no_memories: true,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(cfg.validate().is_err());

        let cfg = RunConfig {
            elbow_min: 5,
            elbow_max: 3,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());

        let cfg = RunConfig {
            cfe: CfeHyper {
                hidden: Vec::new(),
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn separable_single_task_separates_score_histograms() {
        // offset/spread = 24: the brute-force score histograms of test
        // normals and test attacks must not overlap, giving a perfect
        // ranking (PR-AUC 1). The binary F1 stays below 1 by construction:
        // the μ + 2σ rule concedes a small clean false-positive rate, so a
        // few normal tails always land above τ.
        let mut cfg = small_cfg(7);
        cfg.cfe.hidden = vec![32, 16];
        cfg.cfe.epochs = 25;
        let tasks = single_task_data();
        let out = run_scenario(&cfg, &tasks).unwrap();
        assert_eq!(out.scores.num_tasks(), 1);
        assert_eq!(out.pr_auc.get(0, 0), 1.0, "ranking must be perfect");
        assert!(out.scores.get(0, 0) > 0.9, "R = {:?}", out.scores);

        // brute-force histogram check on the final model
        let (_, _, bundles) = preprocess_tasks(&tasks).unwrap();
        let Some(FinalModel::Acorn { params, basis, threshold }) = out.final_model else {
            panic!("expected an acorn final model");
        };
        let h = cfe::encode(&params, &bundles[0].test).unwrap();
        let s = novelty::fre_score(&basis, &h).unwrap();
        let max_normal = s
            .iter()
            .zip(&bundles[0].test_labels)
            .filter(|(_, &l)| l == 0)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let min_attack = s
            .iter()
            .zip(&bundles[0].test_labels)
            .filter(|(_, &l)| l == 1)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min);
        assert!(
            min_attack > 10.0 * max_normal,
            "histograms too close: max normal {max_normal}, min attack {min_attack}"
        );
        assert!(threshold.tau < min_attack, "no attack may fall below τ");
    }

    #[test]
    fn no_memories_matches_full_on_first_task() {
        let tasks = single_task_data();
        let full = run_scenario(&small_cfg(3), &tasks).unwrap();
        let mut ablated_cfg = small_cfg(3);
        ablated_cfg.ablate.no_memories = true;
        let ablated = run_scenario(&ablated_cfg, &tasks).unwrap();
        assert_eq!(full.scores, ablated.scores);
        assert_eq!(full.pr_auc, ablated.pr_auc);
    }

    #[test]
    fn identical_config_reruns_identically() {
        let tasks = single_task_data();
        let a = run_scenario(&small_cfg(11), &tasks).unwrap();
        let b = run_scenario(&small_cfg(11), &tasks).unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.pr_auc, b.pr_auc);
        assert_eq!(a.manifest.to_json(), b.manifest.to_json());
    }

    fn two_task_data(seed: u64) -> Vec<RawTaskData> {
        let spec = SyntheticSpec {
            dims: 8,
            num_tasks: 2,
            normals_per_task: 250,
            attacks_per_task: 60,
            normal_cluster_spread: 0.25,
            attack_offset: 6.0,
            seed,
        };
        let data = generate_synthetic(&spec).unwrap();
        let scenario = ScenarioSpec {
            mode: ScenarioMode::Ena,
            num_tasks: 2,
            seed,
            ..Default::default()
        };
        let bundles = build_scenario(&data, &scenario).unwrap();
        let names: Vec<String> = (0..8).map(|i| format!("f{i}")).collect();
        task_data_from_bundles(&bundles, &names).unwrap()
    }

    #[test]
    fn memory_seen_counts_increase_across_tasks() {
        let tasks = two_task_data(13);
        let out = run_scenario(&small_cfg(13), &tasks).unwrap();
        let t = &out.manifest.tasks;
        assert_eq!(t.len(), 2);
        assert!(t[0].normal_memory_seen > 0);
        assert!(t[1].normal_memory_seen > t[0].normal_memory_seen);
        assert!(t[1].train_memory_seen > t[0].train_memory_seen);
        // merged sizes grow once the memory is non-empty
        assert!(t[1].merged_clean_rows > t[1].clean_rows);
        assert!(t[1].merged_train_rows > t[1].train_rows);
    }

    #[test]
    fn static_pca_baseline_fills_matrix() {
        let tasks = two_task_data(17);
        let mut cfg = small_cfg(17);
        cfg.baseline = BaselineMode::StaticPca;
        let out = run_scenario(&cfg, &tasks).unwrap();
        assert_eq!(out.scores.num_tasks(), 2);
        // the detector always covers its own task reasonably well
        assert!(out.scores.get(0, 0) > 0.6, "R = {:?}", out.scores);
        assert!(out.scores.get(1, 1) > 0.6, "R = {:?}", out.scores);
        assert!(matches!(out.final_model, Some(FinalModel::StaticPca { .. })));
        assert!(out.loss_traces.iter().all(|t| t.is_empty()));
    }

    #[test]
    fn static_ae_baseline_separates_far_attacks() {
        let tasks = single_task_data();
        let mut cfg = small_cfg(19);
        cfg.baseline = BaselineMode::StaticAe;
        cfg.cfe.epochs = 30;
        let out = run_scenario(&cfg, &tasks).unwrap();
        // near-perfect ranking; binary F1 pays the μ + 2σ false-positive toll
        assert!(out.pr_auc.get(0, 0) > 0.98, "PR-AUC = {:?}", out.pr_auc);
        assert!(out.scores.get(0, 0) > 0.85, "R = {:?}", out.scores);
        assert!(!out.loss_traces[0].is_empty());
    }

    #[test]
    fn score_dump_covers_all_test_rows() {
        let tasks = two_task_data(23);
        let mut cfg = small_cfg(23);
        cfg.dump_scores = true;
        let out = run_scenario(&cfg, &tasks).unwrap();
        let dumps = out.score_dumps.unwrap();
        assert_eq!(dumps.len(), 2);
        let total_test: usize = out.manifest.tasks.iter().map(|t| t.test_rows).sum();
        assert_eq!(dumps[0].len(), total_test);
        assert_eq!(dumps[1].len(), total_test);
    }

    #[test]
    fn timing_harness_reports_positive_rates() {
        let tasks = single_task_data();
        let out = run_scenario(&small_cfg(29), &tasks).unwrap();
        let (_, _, bundles) = preprocess_tasks(&tasks).unwrap();
        let model = out.final_model.unwrap();
        let t = time_model_inference(&model, &bundles[0].test, 3).unwrap();
        assert!(t.per_sample_seconds > 0.0);
        assert!(t.per_sample_seconds < 1.0);
    }
}
