//! The synth, prepare, and run subcommands.

use std::path::{Path, PathBuf};

use acorn_core::error::{Error, Result};
use acorn_core::ingest::{self, CsvSchema, LabeledDataset, RawDataset};
use acorn_core::pipeline::{
    self, BaselineMode, FinalModel, RawTaskData, RunOutput,
};
use acorn_core::task_stream::{self, ScenarioPlan};
use serde::{Deserialize, Serialize};

use crate::config::CliConfig;

/// Refuse to overwrite existing output unless forced.
pub fn guard_output_dir(path: &Path, force: bool) -> Result<()> {
    if path.exists() {
        let non_empty = std::fs::read_dir(path)
            .map(|mut d| d.next().is_some())
            .unwrap_or(true);
        if non_empty && !force {
            return Err(Error::config(format!(
                "output directory {} already has contents; pass --force to overwrite",
                path.display()
            )));
        }
    }
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn guard_output_file(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::config(format!(
            "output file {} exists; pass --force to overwrite",
            path.display()
        )));
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn float_cell(v: f64) -> String {
    // shortest round-trip representation keeps reruns byte-identical
    format!("{v}")
}

#[derive(Serialize)]
struct SynthManifest<'a> {
    spec: &'a acorn_core::task_stream::SyntheticSpec,
    rows: usize,
    normals: usize,
    attacks: usize,
    columns: Vec<String>,
}

/// Generate a synthetic dataset CSV plus a sidecar manifest.
pub fn cmd_synth(cfg: &CliConfig, out: &Path, force: bool) -> Result<()> {
    guard_output_file(out, force)?;
    let data = task_stream::generate_synthetic(&cfg.synthetic)?;

    let mut columns: Vec<String> = (0..data.dims()).map(|i| format!("f{i}")).collect();
    let mut writer = csv::Writer::from_path(out)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", out.display())))?;
    let mut header = columns.clone();
    header.push("label".to_string());
    header.push("attack_class".to_string());
    writer
        .write_record(&header)
        .and_then(|()| {
            for i in 0..data.len() {
                let mut record: Vec<String> =
                    data.features.row(i).iter().map(|&v| float_cell(v)).collect();
                record.push(if data.labels[i] == 0 { "normal" } else { "attack" }.to_string());
                record.push(data.classes[i].clone());
                writer.write_record(&record)?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| Error::data(format!("writing {}: {e}", out.display())))?;

    columns.push("label".to_string());
    columns.push("attack_class".to_string());
    let normals = data.labels.iter().filter(|&&l| l == 0).count();
    let manifest = SynthManifest {
        spec: &cfg.synthetic,
        rows: data.len(),
        normals,
        attacks: data.len() - normals,
        columns,
    };
    let manifest_path = sidecar_manifest_path(out);
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    println!(
        "wrote {} rows ({normals} normal, {} attack) to {}",
        data.len(),
        data.len() - normals,
        out.display()
    );
    Ok(())
}

fn sidecar_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[derive(Serialize, Deserialize)]
pub struct PrepareManifest {
    pub mode: task_stream::ScenarioMode,
    pub seed: u64,
    pub num_tasks: usize,
    pub numeric_columns: Vec<String>,
    pub categorical_columns: Vec<String>,
    pub label_column: String,
    pub class_column: String,
    pub tasks: Vec<PreparedTask>,
}

#[derive(Serialize, Deserialize)]
pub struct PreparedTask {
    pub index: usize,
    pub clean_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub attack_classes: Vec<String>,
}

fn write_rows_csv(path: &Path, raw: &RawDataset, rows: &[usize]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
    let header: Vec<String> = raw
        .numeric_names
        .iter()
        .chain(&raw.categorical_names)
        .cloned()
        .collect();
    let result = (|| -> csv::Result<()> {
        writer.write_record(&header)?;
        for &i in rows {
            let r = &raw.records[i];
            let mut record: Vec<String> = r.numeric.iter().map(|&v| float_cell(v)).collect();
            record.extend(r.categorical.iter().cloned());
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    })();
    result.map_err(|e| Error::data(format!("writing {}: {e}", path.display())))
}

fn write_labels_csv(
    path: &Path,
    raw: &RawDataset,
    rows: &[usize],
    label_col: &str,
    class_col: &str,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
    let result = (|| -> csv::Result<()> {
        writer.write_record([label_col, class_col])?;
        for &i in rows {
            let r = &raw.records[i];
            writer.write_record([
                if r.label == 0 { "normal" } else { "attack" },
                r.class.as_str(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    })();
    result.map_err(|e| Error::data(format!("writing {}: {e}", path.display())))
}

/// Materialize a scenario as one directory per task plus a manifest.
///
/// Task files hold raw (unpreprocessed) rows: the run step fits its own
/// frozen preprocessor on task 0, the way a deployed system would. The
/// clustering that drives the evolving-normal split uses a preparation-side
/// preprocessed view of the whole dataset.
pub fn cmd_prepare(cfg: &CliConfig, data_path: &Path, out: &Path, force: bool) -> Result<()> {
    guard_output_dir(out, force)?;
    let raw = ingest::load_csv(data_path, &cfg.schema)?;
    if raw.is_empty() {
        return Err(Error::data(format!("{} has no rows", data_path.display())));
    }

    // preparation-side view for clustering only
    let prep = ingest::fit_preprocessor(&raw)?;
    let view: LabeledDataset = ingest::apply_preprocessor(&prep, &raw)?;
    let plan: ScenarioPlan = task_stream::plan_scenario(&view, &cfg.scenario)?;

    let label_col = cfg.schema.label.as_deref().unwrap_or("label");
    let class_col = cfg.schema.class.as_deref().unwrap_or("attack_class");
    let mut tasks = Vec::with_capacity(plan.tasks.len());
    for (i, task) in plan.tasks.iter().enumerate() {
        let dir = out.join(format!("task_{i:03}"));
        std::fs::create_dir_all(&dir)?;
        // four files per task: the three feature splits share one schema,
        // test labels ride separately (row-aligned with test.csv)
        write_rows_csv(&dir.join("clean.csv"), &raw, &task.clean_rows)?;
        write_rows_csv(&dir.join("train.csv"), &raw, &task.train_rows)?;
        write_rows_csv(&dir.join("test.csv"), &raw, &task.test_rows)?;
        write_labels_csv(
            &dir.join("test_labels.csv"),
            &raw,
            &task.test_rows,
            label_col,
            class_col,
        )?;
        tasks.push(PreparedTask {
            index: i,
            clean_rows: task.clean_rows.len(),
            train_rows: task.train_rows.len(),
            test_rows: task.test_rows.len(),
            attack_classes: task.attack_classes.clone(),
        });
    }

    let manifest = PrepareManifest {
        mode: cfg.scenario.mode,
        seed: cfg.scenario.seed,
        num_tasks: plan.tasks.len(),
        numeric_columns: raw.numeric_names.clone(),
        categorical_columns: raw.categorical_names.clone(),
        label_column: label_col.to_string(),
        class_column: class_col.to_string(),
        tasks,
    };
    std::fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    println!("prepared {} tasks under {}", plan.tasks.len(), out.display());
    Ok(())
}

/// Load the task directories written by `prepare`.
pub fn load_prepared_tasks(dir: &Path) -> Result<Vec<RawTaskData>> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest: PrepareManifest = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("bad manifest {}: {e}", manifest_path.display())))?;

    let unlabeled = CsvSchema {
        label: None,
        class: None,
        ignore: Vec::new(),
        categorical: manifest.categorical_columns.clone(),
    };
    let labels_only = CsvSchema {
        label: Some(manifest.label_column.clone()),
        class: Some(manifest.class_column.clone()),
        ignore: Vec::new(),
        categorical: Vec::new(),
    };

    let mut tasks = Vec::with_capacity(manifest.num_tasks);
    for i in 0..manifest.num_tasks {
        let task_dir = dir.join(format!("task_{i:03}"));
        let mut test = ingest::load_csv(&task_dir.join("test.csv"), &unlabeled)?;
        let labels = ingest::load_csv(&task_dir.join("test_labels.csv"), &labels_only)?;
        if labels.len() != test.len() {
            return Err(Error::data(format!(
                "task {i}: test.csv has {} rows but test_labels.csv has {}",
                test.len(),
                labels.len()
            )));
        }
        for (rec, lab) in test.records.iter_mut().zip(&labels.records) {
            rec.label = lab.label;
            rec.class = lab.class.clone();
        }
        tasks.push(RawTaskData {
            clean: ingest::load_csv(&task_dir.join("clean.csv"), &unlabeled)?,
            train: ingest::load_csv(&task_dir.join("train.csv"), &unlabeled)?,
            test,
        });
    }
    Ok(tasks)
}

#[derive(Serialize)]
struct TimingReport {
    mode: String,
    per_sample_seconds: f64,
    static_pca_per_sample_seconds: f64,
    ratio: f64,
    samples: usize,
    repeats: usize,
}

/// Execute a scenario and write every artifact into the results directory.
pub fn cmd_run(
    cfg: &CliConfig,
    tasks_dir: &Path,
    out: &Path,
    force: bool,
    dump_params: bool,
) -> Result<()> {
    guard_output_dir(out, force)?;
    cfg.run.validate()?;
    let tasks = load_prepared_tasks(tasks_dir)?;
    let (preprocessor, feature_names, bundles) = pipeline::preprocess_tasks(&tasks)?;

    let output: RunOutput = match cfg.run.baseline {
        BaselineMode::Acorn => {
            pipeline::run_acorn(&cfg.run, &bundles, preprocessor.clone(), feature_names.clone())?
        }
        _ => pipeline::run_static_baseline(
            &cfg.run,
            &bundles,
            preprocessor.clone(),
            feature_names.clone(),
        )?,
    };

    std::fs::write(out.join("R.csv"), output.scores.to_csv())?;
    std::fs::write(out.join("prauc.csv"), output.pr_auc.to_csv())?;
    std::fs::write(out.join("manifest.json"), output.manifest.to_json())?;
    std::fs::write(
        out.join("metrics.csv"),
        format!(
            "avg_f1,fwd_transfer,bwd_transfer\n{:.6},{:.6},{:.6}\n",
            output.manifest.avg_f1, output.manifest.fwd_transfer, output.manifest.bwd_transfer
        ),
    )?;
    for (i, trace) in output.loss_traces.iter().enumerate() {
        if !trace.is_empty() {
            acorn_core::cfe::write_loss_trace_csv(&out.join(format!("loss_trace_task_{i}.csv")), trace)?;
        }
    }
    if let Some(dumps) = &output.score_dumps {
        for (i, samples) in dumps.iter().enumerate() {
            pipeline::write_score_dump_csv(&out.join(format!("scores_task_{i}.csv")), samples)?;
        }
    }
    if dump_params {
        match &output.final_model {
            Some(FinalModel::Acorn { params, .. }) | Some(FinalModel::StaticAe { params, .. }) => {
                std::fs::write(out.join("params.json"), params.to_json())?;
            }
            _ => {}
        }
    }

    // inference-cost report: the run's model vs a plain input-space PCA
    // detector fit by the same procedure (wall-clock, so kept out of the
    // deterministic manifest)
    if let Some(model) = &output.final_model {
        let mut probe = bundles[0].test.clone();
        for b in &bundles[1..] {
            probe = probe.vstack(&b.test)?;
        }
        let repeats = 5;
        let own = pipeline::time_model_inference(model, &probe, repeats)?;
        let static_time = match model {
            FinalModel::StaticPca { .. } => own,
            _ => {
                let mut static_cfg = cfg.run.clone();
                static_cfg.baseline = BaselineMode::StaticPca;
                static_cfg.ablate = Default::default();
                static_cfg.dump_scores = false;
                let reference = pipeline::run_static_baseline(
                    &static_cfg,
                    &bundles,
                    preprocessor,
                    feature_names,
                )?;
                let model = reference.final_model.expect("static run yields a model");
                pipeline::time_model_inference(&model, &probe, repeats)?
            }
        };
        let report = TimingReport {
            mode: cfg.run.baseline.to_string(),
            per_sample_seconds: own.per_sample_seconds,
            static_pca_per_sample_seconds: static_time.per_sample_seconds,
            ratio: own.per_sample_seconds / static_time.per_sample_seconds.max(1e-12),
            samples: own.samples,
            repeats,
        };
        std::fs::write(
            out.join("timing.json"),
            serde_json::to_string_pretty(&report).expect("timing serializes"),
        )?;
    }

    println!(
        "run complete: AVG {:.4}, FwdTrans {:.4}, BwdTrans {:+.4} → {}",
        output.manifest.avg_f1,
        output.manifest.fwd_transfer,
        output.manifest.bwd_transfer,
        out.display()
    );
    Ok(())
}
