use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::KnnParams;

/// Rows are true labels, columns predicted labels, both in `labels` order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// CSV with a `true\predicted` corner cell and one row per true label.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Macro-averaged metrics plus support-weighted averages for comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
    pub chosen_hyperparameters: Option<KnnParams>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(
    predictions: &[String],
    truth: &[String],
    label_order: &[String],
) -> Result<EvalReport> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    let index: HashMap<&str, usize> = label_order
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let lookup = |l: &String| {
        index
            .get(l.as_str())
            .copied()
            .ok_or_else(|| Error::UnknownLabel(l.clone()))
    };
    let n = label_order.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (t, p) in truth.iter().zip(predictions) {
        counts[lookup(t)?][lookup(p)?] += 1;
    }
    let confusion = ConfusionMatrix {
        labels: label_order.to_vec(),
        counts,
    };

    let total = confusion.total();
    let correct: u64 = (0..n).map(|i| confusion.counts[i][i]).sum();
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|i| {
            let tp = confusion.counts[i][i];
            let support = confusion.row_sum(i);
            let precision = ratio(tp, confusion.col_sum(i));
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label: label_order[i].clone(),
                support,
                precision,
                recall,
                f1,
            }
        })
        .collect();

    let macro_avg = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n as f64;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class
            .iter()
            .map(|c| f(c) * c.support as f64)
            .sum::<f64>()
            / total as f64
    };
    Ok(EvalReport {
        accuracy: ratio(correct, total),
        precision: macro_avg(|c| c.precision),
        recall: macro_avg(|c| c.recall),
        f1: macro_avg(|c| c.f1),
        weighted_precision: weighted(|c| c.precision),
        weighted_recall: weighted(|c| c.recall),
        weighted_f1: weighted(|c| c.f1),
        per_class,
        confusion,
        chosen_hyperparameters: None,
    })
}
