//! CSV ingestion and the unified preprocessing pipeline.
//!
//! Flow records come in as a mix of categorical and numeric columns plus a
//! binary label and an attack-class tag. Preprocessing is one-hot encoding
//! for categoricals, robust scaling ((x − median) / IQR) for numerics, and a
//! final per-feature min-max step into [0, 1]. Statistics are fit once and
//! frozen; apply-time values outside the fitted range are clamped, and
//! categories never seen at fit time map to an all-zeros one-hot block.
//!
//! CSV dialect: comma-separated, first row is the header, UTF-8, `.` as the
//! decimal separator.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Column roles for [`load_csv`]. Columns listed nowhere are treated as
/// features; `categorical` forces a feature column to be categorical even if
/// every value parses as a number (numeric/categorical is otherwise inferred).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsvSchema {
    /// Name of the binary label column (`normal`/`attack`, or `0`/`1`).
    pub label: Option<String>,
    /// Name of the attack-class tag column.
    pub class: Option<String>,
    /// Columns to drop entirely.
    pub ignore: Vec<String>,
    /// Feature columns to force categorical.
    pub categorical: Vec<String>,
}

/// One parsed flow record.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub numeric: Vec<f64>,
    pub categorical: Vec<String>,
    /// 0 = normal, 1 = attack.
    pub label: u8,
    /// Attack-class tag; empty for normal rows.
    pub class: String,
}

/// Tabular rows sharing one schema, before preprocessing.
#[derive(Clone, Debug, Default)]
pub struct RawDataset {
    pub numeric_names: Vec<String>,
    pub categorical_names: Vec<String>,
    pub records: Vec<RawRecord>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Wrap an already-numeric matrix (synthetic data, encoded features).
    pub fn from_numeric(names: Vec<String>, x: &Matrix, labels: &[u8], classes: &[String]) -> Result<Self> {
        if x.rows() != labels.len() || x.rows() != classes.len() {
            return Err(Error::data("feature/label/class row counts differ"));
        }
        if names.len() != x.cols() {
            return Err(Error::data("feature name count does not match columns"));
        }
        let records = x
            .iter_rows()
            .zip(labels.iter().zip(classes))
            .map(|(row, (&label, class))| RawRecord {
                numeric: row.to_vec(),
                categorical: Vec::new(),
                label,
                class: class.clone(),
            })
            .collect();
        Ok(RawDataset {
            numeric_names: names,
            categorical_names: Vec::new(),
            records,
        })
    }

    /// Concatenate two datasets with identical schemas.
    pub fn concat(&self, other: &RawDataset) -> Result<RawDataset> {
        if self.numeric_names != other.numeric_names || self.categorical_names != other.categorical_names {
            return Err(Error::data("cannot concatenate datasets with different schemas"));
        }
        let mut out = self.clone();
        out.records.extend(other.records.iter().cloned());
        Ok(out)
    }

    pub fn select(&self, indices: &[usize]) -> RawDataset {
        RawDataset {
            numeric_names: self.numeric_names.clone(),
            categorical_names: self.categorical_names.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// Preprocessed feature matrix in [0,1] with labels and class tags.
#[derive(Clone, Debug)]
pub struct LabeledDataset {
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub classes: Vec<String>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        self.features.cols()
    }

    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: indices.iter().map(|&i| self.classes[i].clone()).collect(),
        }
    }
}

fn parse_label(value: &str, row: usize) -> Result<u8> {
    match value.trim().to_ascii_lowercase().as_str() {
        "normal" | "0" => Ok(0),
        "attack" | "1" => Ok(1),
        "" => Err(Error::data(format!("row {row}: missing label"))),
        other => Err(Error::data(format!(
            "row {row}: unrecognized label {other:?} (expected normal/attack)"
        ))),
    }
}

/// Load a CSV file under the given column-role schema.
///
/// Rows are 1-indexed in error messages, counting the header as row 0. A row
/// whose arity disagrees with the header is an error naming that row.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("{}: bad header: {e}", path.display())))?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let find = |name: &str| headers.iter().position(|h| h == name);
    let label_idx = match &schema.label {
        Some(name) => Some(
            find(name).ok_or_else(|| Error::data(format!("missing label column {name:?}")))?,
        ),
        None => None,
    };
    let class_idx = match &schema.class {
        Some(name) => Some(
            find(name).ok_or_else(|| Error::data(format!("missing attack-class column {name:?}")))?,
        ),
        None => None,
    };

    let mut feature_cols: Vec<usize> = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if Some(i) == label_idx || Some(i) == class_idx || schema.ignore.iter().any(|x| x == h) {
            continue;
        }
        feature_cols.push(i);
    }

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let row = line + 1;
        let rec = rec.map_err(|e| Error::data(format!("row {row}: {e}")))?;
        if rec.len() != headers.len() {
            return Err(Error::data(format!(
                "row {row}: expected {} fields, found {}",
                headers.len(),
                rec.len()
            )));
        }
        rows.push(rec);
    }

    // Numeric unless forced categorical or some value fails to parse.
    let mut is_numeric: Vec<bool> = feature_cols
        .iter()
        .map(|&c| !schema.categorical.iter().any(|x| x == &headers[c]))
        .collect();
    for rec in &rows {
        for (k, &c) in feature_cols.iter().enumerate() {
            if is_numeric[k] && rec.get(c).is_none_or(|v| v.trim().parse::<f64>().is_err()) {
                is_numeric[k] = false;
            }
        }
    }

    let numeric_cols: Vec<usize> = feature_cols
        .iter()
        .zip(&is_numeric)
        .filter_map(|(&c, &n)| n.then_some(c))
        .collect();
    let categorical_cols: Vec<usize> = feature_cols
        .iter()
        .zip(&is_numeric)
        .filter_map(|(&c, &n)| (!n).then_some(c))
        .collect();

    let mut records = Vec::with_capacity(rows.len());
    for (line, rec) in rows.iter().enumerate() {
        let row = line + 1;
        let label = match label_idx {
            Some(i) => parse_label(rec.get(i).unwrap_or(""), row)?,
            None => 0,
        };
        let mut class = match class_idx {
            Some(i) => rec.get(i).unwrap_or("").trim().to_string(),
            None => String::new(),
        };
        if label == 0 {
            class.clear();
        } else if class.is_empty() {
            class = "attack".to_string();
        }
        let numeric = numeric_cols
            .iter()
            .map(|&c| rec.get(c).unwrap().trim().parse::<f64>().unwrap())
            .collect();
        let categorical = categorical_cols
            .iter()
            .map(|&c| rec.get(c).unwrap().trim().to_string())
            .collect();
        records.push(RawRecord {
            numeric,
            categorical,
            label,
            class,
        });
    }

    Ok(RawDataset {
        numeric_names: numeric_cols.iter().map(|&c| headers[c].clone()).collect(),
        categorical_names: categorical_cols.iter().map(|&c| headers[c].clone()).collect(),
        records,
    })
}

/// Frozen preprocessing statistics. Field order mirrors the serialized
/// document: vocabularies, medians, scales, mins, maxs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Preprocessor {
    /// Per categorical field: sorted category vocabulary.
    pub vocabularies: Vec<CategoricalVocab>,
    /// Per numeric feature: median of the fit sample.
    pub medians: Vec<f64>,
    /// Per numeric feature: IQR of the fit sample, or 1 where the IQR is 0.
    pub scales: Vec<f64>,
    /// Per output feature (numerics then one-hot blocks): post-scaling min.
    pub mins: Vec<f64>,
    /// Per output feature: post-scaling max.
    pub maxs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CategoricalVocab {
    pub field: String,
    pub categories: Vec<String>,
}

/// Linear-interpolation quantile: position q·(n−1) into the sorted sample.
/// This is the convention used for all medians and IQRs in the pipeline.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = lo + 1;
    if hi >= n {
        return sorted[n - 1];
    }
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Fit preprocessing statistics on a dataset.
///
/// Medians and IQRs are computed per numeric feature; one-hot vocabularies
/// are frozen from the categories present; per-feature min/max of the
/// robust-scaled output is recorded for the final min-max step.
pub fn fit_preprocessor(raw: &RawDataset) -> Result<Preprocessor> {
    if raw.is_empty() {
        return Err(Error::data("cannot fit preprocessor on an empty dataset"));
    }
    let n_num = raw.numeric_names.len();

    let mut medians = Vec::with_capacity(n_num);
    let mut scales = Vec::with_capacity(n_num);
    for j in 0..n_num {
        let mut col: Vec<f64> = raw.records.iter().map(|r| r.numeric[j]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let median = quantile(&col, 0.5);
        let iqr = quantile(&col, 0.75) - quantile(&col, 0.25);
        medians.push(median);
        scales.push(if iqr > 0.0 { iqr } else { 1.0 });
    }

    let mut vocabularies = Vec::with_capacity(raw.categorical_names.len());
    for (j, field) in raw.categorical_names.iter().enumerate() {
        let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
        for r in &raw.records {
            seen.insert(r.categorical[j].as_str(), ());
        }
        vocabularies.push(CategoricalVocab {
            field: field.clone(),
            categories: seen.keys().map(|s| s.to_string()).collect(),
        });
    }

    let mut pre = Preprocessor {
        vocabularies,
        medians,
        scales,
        mins: Vec::new(),
        maxs: Vec::new(),
    };
    let d = pre.output_dim();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    let mut row = vec![0.0; d];
    for r in &raw.records {
        pre.scaled_row(r, &mut row);
        for ((mn, mx), v) in mins.iter_mut().zip(&mut maxs).zip(&row) {
            *mn = mn.min(*v);
            *mx = mx.max(*v);
        }
    }
    pre.mins = mins;
    pre.maxs = maxs;
    Ok(pre)
}

impl Preprocessor {
    /// Number of output features: numerics plus all one-hot columns.
    pub fn output_dim(&self) -> usize {
        self.medians.len() + self.vocabularies.iter().map(|v| v.categories.len()).sum::<usize>()
    }

    /// Output feature names, numerics first then `field=value` per category.
    pub fn feature_names(&self, numeric_names: &[String]) -> Vec<String> {
        let mut names: Vec<String> = numeric_names.to_vec();
        for v in &self.vocabularies {
            for c in &v.categories {
                names.push(format!("{}={}", v.field, c));
            }
        }
        names
    }

    /// Robust-scaled row (before min-max), one-hot blocks included.
    fn scaled_row(&self, r: &RawRecord, out: &mut [f64]) {
        let n_num = self.medians.len();
        for (o, ((v, m), s)) in out
            .iter_mut()
            .zip(r.numeric.iter().zip(&self.medians).zip(&self.scales))
            .take(n_num)
        {
            *o = (v - m) / s;
        }
        let mut offset = n_num;
        for (j, vocab) in self.vocabularies.iter().enumerate() {
            let block = &mut out[offset..offset + vocab.categories.len()];
            block.fill(0.0);
            if let Ok(pos) = vocab.categories.binary_search(&r.categorical[j]) {
                block[pos] = 1.0;
            }
            offset += vocab.categories.len();
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("preprocessor serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::data(format!("bad preprocessor document: {e}")))
    }
}

/// Apply frozen statistics to a dataset, producing features in [0, 1].
///
/// Values outside the fitted [min, max] are clamped; a categorical value
/// absent from the vocabulary yields an all-zeros one-hot block. A feature
/// whose fitted range is degenerate (max == min) maps to 0.
pub fn apply_preprocessor(pre: &Preprocessor, raw: &RawDataset) -> Result<LabeledDataset> {
    if raw.numeric_names.len() != pre.medians.len()
        || raw.categorical_names.len() != pre.vocabularies.len()
    {
        return Err(Error::data(format!(
            "dataset schema ({} numeric, {} categorical) does not match preprocessor ({}, {})",
            raw.numeric_names.len(),
            raw.categorical_names.len(),
            pre.medians.len(),
            pre.vocabularies.len()
        )));
    }
    let d = pre.output_dim();
    let mut features = Matrix::zeros(raw.len(), d);
    let mut scaled = vec![0.0; d];
    for (i, r) in raw.records.iter().enumerate() {
        pre.scaled_row(r, &mut scaled);
        let out = features.row_mut(i);
        for (j, v) in scaled.iter().enumerate() {
            let (mn, mx) = (pre.mins[j], pre.maxs[j]);
            out[j] = if mx > mn {
                ((v - mn) / (mx - mn)).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Ok(LabeledDataset {
        features,
        labels: raw.records.iter().map(|r| r.label).collect(),
        classes: raw.records.iter().map(|r| r.class.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_temp_csv(content: &str) -> temppath::TempCsv {
        temppath::TempCsv::new(content)
    }

    mod temppath {
        use std::path::{Path, PathBuf};

        pub struct TempCsv(PathBuf);

        impl TempCsv {
            pub fn new(content: &str) -> Self {
                let dir = std::env::temp_dir();
                let name = format!(
                    "acorn-ingest-{}-{}.csv",
                    std::process::id(),
                    super::COUNTER.fetch_add(1, std::sync::atomic::Ordering::SeqCst)
                );
                let path = dir.join(name);
                std::fs::write(&path, content).unwrap();
                TempCsv(path)
            }

            pub fn path(&self) -> &Path {
                &self.0
            }
        }

        impl Drop for TempCsv {
            fn drop(&mut self) {
                let _ = std::fs::remove_file(&self.0);
            }
        }
    }

    static COUNTER: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);

    fn schema() -> CsvSchema {
        CsvSchema {
            label: Some("label".into()),
            class: Some("attack_class".into()),
            ..Default::default()
        }
    }

    #[test]
    fn load_csv_parses_numeric_rows() {
        let f = write_temp_csv("a,b,label,attack_class\n1,2,normal,\n3,4,attack,dos\n5,6,normal,\n");
        let raw = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(raw.len(), 3);
        assert_eq!(raw.numeric_names, vec!["a", "b"]);
        assert!(raw.categorical_names.is_empty());
        assert_eq!(raw.records[1].label, 1);
        assert_eq!(raw.records[1].class, "dos");
        assert_eq!(raw.records[0].class, "");
    }

    #[test]
    fn load_csv_captures_categorical_vocabulary() {
        let f = write_temp_csv(
            "proto,bytes,label,attack_class\ntcp,10,normal,\nudp,20,normal,\ntcp,30,attack,scan\n",
        );
        let raw = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(raw.categorical_names, vec!["proto"]);
        let pre = fit_preprocessor(&raw).unwrap();
        assert_eq!(pre.vocabularies.len(), 1);
        assert_eq!(pre.vocabularies[0].categories, vec!["tcp", "udp"]);
    }

    #[test]
    fn load_csv_missing_label_cell_names_row() {
        let mut content = String::from("a,label,attack_class\n");
        for i in 1..=6 {
            content += &format!("{i},normal,\n");
        }
        content += "7,,\n";
        let f = write_temp_csv(&content);
        let err = load_csv(f.path(), &schema()).unwrap_err();
        assert!(err.to_string().contains("row 7: missing label"), "{err}");
    }

    #[test]
    fn load_csv_wrong_arity_names_row() {
        let f = write_temp_csv("a,b,label,attack_class\n1,2,normal,\n1,normal,\n");
        let err = load_csv(f.path(), &schema()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn load_csv_missing_label_column() {
        let f = write_temp_csv("a,b\n1,2\n");
        let err = load_csv(f.path(), &schema()).unwrap_err();
        assert!(err.to_string().contains("missing label column"), "{err}");
    }

    #[test]
    fn load_csv_missing_file() {
        let err = load_csv(Path::new("/nonexistent/xyz.csv"), &schema()).unwrap_err();
        assert!(err.to_string().contains("cannot open"));
    }

    fn numeric_raw(values: &[f64]) -> RawDataset {
        let x = Matrix::from_rows(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();
        let labels = vec![0u8; values.len()];
        let classes = vec![String::new(); values.len()];
        RawDataset::from_numeric(vec!["f0".into()], &x, &labels, &classes).unwrap()
    }

    #[test]
    fn fit_computes_median_and_iqr_under_linear_interpolation() {
        // Hand-computed under the q·(n−1) linear-interpolation convention:
        // sorted {1,2,3,4,100}: median = 3, Q1 at pos 1.0 = 2, Q3 at pos 3.0 = 4.
        let raw = numeric_raw(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        let pre = fit_preprocessor(&raw).unwrap();
        assert_eq!(pre.medians, vec![3.0]);
        assert_eq!(pre.scales, vec![2.0]);
    }

    #[test]
    fn fit_replaces_degenerate_iqr_with_one() {
        let raw = numeric_raw(&[5.0, 5.0, 5.0]);
        let pre = fit_preprocessor(&raw).unwrap();
        assert_eq!(pre.medians, vec![5.0]);
        assert_eq!(pre.scales, vec![1.0]);
    }

    #[test]
    fn fit_single_row_dataset() {
        let raw = numeric_raw(&[7.5]);
        let pre = fit_preprocessor(&raw).unwrap();
        assert_eq!(pre.medians, vec![7.5]);
        assert_eq!(pre.scales, vec![1.0]);
    }

    #[test]
    fn fit_rejects_empty_dataset() {
        let raw = RawDataset::default();
        assert!(fit_preprocessor(&raw).is_err());
    }

    #[test]
    fn apply_maps_fit_extremes_to_zero_and_one() {
        let raw = numeric_raw(&[2.0, 4.0, 6.0, 10.0]);
        let pre = fit_preprocessor(&raw).unwrap();
        let ds = apply_preprocessor(&pre, &raw).unwrap();
        assert_eq!(ds.features.get(0, 0), 0.0);
        assert_eq!(ds.features.get(3, 0), 1.0);
    }

    #[test]
    fn apply_clamps_out_of_range_values() {
        let fit = numeric_raw(&[0.0, 1.0, 2.0]);
        let pre = fit_preprocessor(&fit).unwrap();
        let wild = numeric_raw(&[-100.0, 100.0]);
        let ds = apply_preprocessor(&pre, &wild).unwrap();
        assert_eq!(ds.features.get(0, 0), 0.0);
        assert_eq!(ds.features.get(1, 0), 1.0);
    }

    #[test]
    fn apply_unseen_category_yields_zero_block() {
        let f = write_temp_csv("proto,label,attack_class\ntcp,normal,\nudp,normal,\n");
        let raw = load_csv(f.path(), &schema()).unwrap();
        let pre = fit_preprocessor(&raw).unwrap();
        let f2 = write_temp_csv("proto,label,attack_class\nicmp,normal,\n");
        let raw2 = load_csv(f2.path(), &schema()).unwrap();
        let ds = apply_preprocessor(&pre, &raw2).unwrap();
        assert_eq!(ds.features.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn preprocessor_json_round_trip() {
        let f = write_temp_csv("proto,bytes,label,attack_class\ntcp,1,normal,\nudp,9,attack,dos\n");
        let raw = load_csv(f.path(), &schema()).unwrap();
        let pre = fit_preprocessor(&raw).unwrap();
        let json = pre.to_json();
        // field order of the document is fixed
        let voc = json.find("vocabularies").unwrap();
        let med = json.find("medians").unwrap();
        let sca = json.find("scales").unwrap();
        let mins = json.find("mins").unwrap();
        let maxs = json.find("maxs").unwrap();
        assert!(voc < med && med < sca && sca < mins && mins < maxs);
        assert_eq!(Preprocessor::from_json(&json).unwrap(), pre);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let raw = numeric_raw(&[5.0, 5.0, 5.0]);
        let pre = fit_preprocessor(&raw).unwrap();
        let ds = apply_preprocessor(&pre, &raw).unwrap();
        for i in 0..3 {
            assert_eq!(ds.features.get(i, 0), 0.0);
        }
    }

    proptest! {
        #[test]
        fn outputs_always_in_unit_interval(
            fit_vals in proptest::collection::vec(-1e6f64..1e6, 1..30),
            apply_vals in proptest::collection::vec(-1e9f64..1e9, 1..30),
        ) {
            let pre = fit_preprocessor(&numeric_raw(&fit_vals)).unwrap();
            let ds = apply_preprocessor(&pre, &numeric_raw(&apply_vals)).unwrap();
            for i in 0..ds.len() {
                let v = ds.features.get(i, 0);
                prop_assert!((0.0..=1.0).contains(&v), "value {v} out of range");
            }
        }

        #[test]
        fn fit_then_apply_attains_both_endpoints(
            mut vals in proptest::collection::vec(-1e3f64..1e3, 2..40),
        ) {
            vals[0] = -2000.0; // guarantee a non-constant column
            let raw = numeric_raw(&vals);
            let pre = fit_preprocessor(&raw).unwrap();
            let ds = apply_preprocessor(&pre, &raw).unwrap();
            let col: Vec<f64> = (0..ds.len()).map(|i| ds.features.get(i, 0)).collect();
            let mn = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let mx = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(mn, 0.0);
            prop_assert_eq!(mx, 1.0);
        }
    }

    #[test]
    fn one_hot_blocks_sum_to_zero_or_one() {
        let f = write_temp_csv(
            "proto,state,label,attack_class\ntcp,on,normal,\nudp,off,normal,\ntcp,on,attack,dos\n",
        );
        let raw = load_csv(f.path(), &schema()).unwrap();
        let pre = fit_preprocessor(&raw).unwrap();
        // unseen categories in both fields
        let f2 = write_temp_csv("proto,state,label,attack_class\nicmp,on,normal,\ntcp,dim,normal,\n");
        let raw2 = load_csv(f2.path(), &schema()).unwrap();
        let ds = apply_preprocessor(&pre, &raw2).unwrap();
        // blocks: proto (2 cols), state (2 cols)
        for i in 0..ds.len() {
            let row = ds.features.row(i);
            let proto_sum: f64 = row[0..2].iter().sum();
            let state_sum: f64 = row[2..4].iter().sum();
            assert!(proto_sum == 0.0 || proto_sum == 1.0);
            assert!(state_sum == 0.0 || state_sum == 1.0);
        }
    }

    #[test]
    fn forced_categorical_overrides_inference() {
        let f = write_temp_csv("port,label,attack_class\n80,normal,\n443,normal,\n");
        let mut s = schema();
        s.categorical = vec!["port".into()];
        let raw = load_csv(f.path(), &s).unwrap();
        assert_eq!(raw.categorical_names, vec!["port"]);
        assert!(raw.numeric_names.is_empty());
    }
}
