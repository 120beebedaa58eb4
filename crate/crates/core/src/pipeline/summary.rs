use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{EvalReport, KnnParams, Trial};

/// Everything `train-eval` learned about one feature file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    /// `histogram`, `hog` or `haralick`.
    pub kind: String,
    pub technique: Option<String>,
    pub feature_dims: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub search_budget: usize,
    pub best_trial: Trial,
    pub trials: Vec<Trial>,
    pub metrics: EvalReport,
    pub config: serde_json::Value,
}

impl RunReport {
    pub fn hyperparameters(&self) -> KnnParams {
        self.best_trial.params
    }
}

pub const SUMMARY_COLUMNS: [&str; 4] = ["accuracy", "precision", "recall", "f1"];

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub technique: String,
    pub values: [f64; 4],
    /// Whether this row holds the column maximum (ties all flagged).
    pub best: [bool; 4],
}

/// One row per report, maxima flagged per column.
pub fn summarize(reports: &[&RunReport]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = reports
        .iter()
        .map(|r| SummaryRow {
            name: r.name.clone(),
            technique: r.technique.clone().unwrap_or_else(|| "-".into()),
            values: [
                r.metrics.accuracy,
                r.metrics.precision,
                r.metrics.recall,
                r.metrics.f1,
            ],
            best: [false; 4],
        })
        .collect();
    for col in 0..SUMMARY_COLUMNS.len() {
        let max = rows
            .iter()
            .map(|r| r.values[col])
            .fold(f64::NEG_INFINITY, f64::max);
        for r in &mut rows {
            r.best[col] = r.values[col] == max;
        }
    }
    rows
}

/// CSV with the metric columns plus a `best` column naming the columns this
/// row wins, separated by `;`.
pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["name", "technique"];
    header.extend(SUMMARY_COLUMNS);
    header.push("best");
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        let mut rec = vec![r.name.clone(), r.technique.clone()];
        rec.extend(r.values.iter().map(|v| format!("{v:.4}")));
        let best: Vec<&str> = SUMMARY_COLUMNS
            .iter()
            .zip(r.best)
            .filter(|(_, b)| *b)
            .map(|(c, _)| *c)
            .collect();
        rec.push(best.join(";"));
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Markdown table with column maxima in bold.
pub fn summary_markdown(title: &str, rows: &[SummaryRow]) -> String {
    let mut s =
        format!("## {title}\n\n| name | technique | accuracy | precision | recall | f1 |\n");
    s.push_str("|---|---|---:|---:|---:|---:|\n");
    for r in rows {
        let _ = write!(s, "| {} | {} |", r.name, r.technique);
        for (v, best) in r.values.iter().zip(r.best) {
            if best {
                let _ = write!(s, " **{v:.4}** |");
            } else {
                let _ = write!(s, " {v:.4} |");
            }
        }
        s.push('\n');
    }
    s
}
