//! Continual novelty detection for tabular intrusion data.
//!
//! The pipeline learns from a small clean-normal reference set plus an
//! unlabeled contaminated stream, one task at a time: cluster-based
//! pseudo-labels propagate the clean set's supervision onto the stream, two
//! reservoir memories replay past normals and past pseudo-labeled rows, an
//! MLP autoencoder trained with triplet + reconstruction losses keeps the
//! embedding discriminative as distributions drift, and a PCA model over
//! encoded clean data scores anomalies by feature reconstruction error with
//! a μ + 2σ threshold. After each task the detector is evaluated on every
//! task's test set, yielding the F1 score matrix behind the AVG, forward-
//! transfer, and backward-transfer aggregates.
//!
//! Modules follow the data path: [`ingest`] (CSV + preprocessing),
//! [`task_stream`] (scenario construction, synthetic drift generator),
//! [`pseudo_labeler`], [`memory`], [`cfe`] (the feature extractor),
//! [`novelty`] (PCA/FRE scoring), [`metrics`], and [`pipeline`] (the
//! per-task loop, baselines, and ablations).

pub mod cfe;
pub mod error;
pub mod ingest;
pub(crate) mod kmeans;
pub mod linalg;
pub mod memory;
pub mod metrics;
pub mod novelty;
pub mod pipeline;
pub mod pseudo_labeler;
pub mod rng;
pub mod task_stream;

pub use error::{Error, Result};
