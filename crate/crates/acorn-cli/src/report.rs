//! The report subcommand: summarize one or more results directories into a
//! comparison CSV/JSON plus one SVG bar chart per aggregate metric.

use std::path::{Path, PathBuf};

use acorn_core::error::{Error, Result};
use acorn_core::metrics::{self, ScoreMatrix};
use serde::Serialize;

use crate::commands::guard_output_dir;
use crate::svg;

#[derive(Serialize)]
struct DirSummary {
    dir: String,
    avg_f1: f64,
    fwd_transfer: f64,
    bwd_transfer: f64,
}

fn dir_label(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn cmd_report(results_dirs: &[PathBuf], out: &Path, force: bool) -> Result<()> {
    guard_output_dir(out, force)?;
    let mut summaries = Vec::with_capacity(results_dirs.len());
    for dir in results_dirs {
        let r_path = dir.join("R.csv");
        let text = std::fs::read_to_string(&r_path)
            .map_err(|e| Error::data(format!("cannot read {}: {e}", r_path.display())))?;
        let r = ScoreMatrix::from_csv(&text)
            .map_err(|e| Error::data(format!("{}: {e}", r_path.display())))?;
        summaries.push(DirSummary {
            dir: dir_label(dir),
            avg_f1: metrics::avg_f1(&r),
            fwd_transfer: metrics::fwd_transfer(&r),
            bwd_transfer: metrics::bwd_transfer(&r),
        });
    }

    let mut csv_text = String::from("results_dir,avg_f1,fwd_transfer,bwd_transfer\n");
    for s in &summaries {
        csv_text += &format!(
            "{},{:.6},{:.6},{:.6}\n",
            s.dir, s.avg_f1, s.fwd_transfer, s.bwd_transfer
        );
    }
    std::fs::write(out.join("summary.csv"), csv_text)?;
    std::fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summaries).expect("summary serializes"),
    )?;

    let labels: Vec<String> = summaries.iter().map(|s| s.dir.clone()).collect();
    for (metric, values) in [
        ("avg_f1", summaries.iter().map(|s| s.avg_f1).collect::<Vec<_>>()),
        ("fwd_transfer", summaries.iter().map(|s| s.fwd_transfer).collect()),
        ("bwd_transfer", summaries.iter().map(|s| s.bwd_transfer).collect()),
    ] {
        let chart = svg::bar_chart(metric, &labels, &values);
        std::fs::write(out.join(format!("{metric}.svg")), chart)?;
    }
    println!("report over {} run(s) → {}", summaries.len(), out.display());
    Ok(())
}
