//! Config file handling and flag overrides.
//!
//! One JSON document mirrors every knob of the library (synthetic generator,
//! scenario construction, run configuration, CSV schema). Any key can be
//! omitted — defaults fill the rest — but unknown keys are rejected. CLI
//! flags override file values; a top-level seed overrides the per-section
//! seeds so one `--seed` pins the whole run.

use acorn_core::error::{Error, Result};
use acorn_core::ingest::CsvSchema;
use acorn_core::pipeline::RunConfig;
use acorn_core::task_stream::{ScenarioSpec, SyntheticSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    /// Overrides the seeds of every section when set.
    pub seed: Option<u64>,
    pub synthetic: SyntheticSpec,
    pub scenario: ScenarioSpec,
    pub run: RunConfig,
    pub schema: CsvSchema,
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::config(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str::<CliConfig>(&text)
                    .map_err(|e| Error::config(format!("bad config {}: {e}", p.display())))?
            }
            None => CliConfig::default(),
        };
        if cfg.schema.label.is_none() {
            cfg.schema.label = Some("label".to_string());
        }
        if cfg.schema.class.is_none() {
            cfg.schema.class = Some("attack_class".to_string());
        }
        Ok(cfg)
    }

    /// Apply the top-level seed (flag beats file) to every section.
    pub fn apply_seed(&mut self, flag_seed: Option<u64>) {
        if let Some(seed) = flag_seed.or(self.seed) {
            self.seed = Some(seed);
            self.synthetic.seed = seed;
            self.scenario.seed = seed;
            self.run.seed = seed;
        }
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
