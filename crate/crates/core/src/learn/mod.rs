//! Learning machinery: Gini importance ranking from a random forest, a
//! k-nearest-neighbour classifier with seeded hyperparameter search, and
//! classification metrics.

mod forest;
mod knn;
mod metrics;
mod search;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forest::{fit_forest, ForestConfig};
pub use knn::{KnnModel, KnnParams, Metric, Weights};
pub use metrics::{evaluate, ClassMetrics, ConfusionMatrix, EvalReport};
pub use search::{search_knn, SearchOutcome, Trial};

/// Features ordered by decreasing importance.
///
/// `importances` is indexed by feature; `order[0]` is the most important
/// feature. Ties are ordered by lower feature index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GiniRanking {
    pub order: Vec<usize>,
    pub importances: Vec<f64>,
}

impl GiniRanking {
    /// Normalize raw importances to sum 1 (unless all zero) and rank them.
    pub fn from_importances(mut importances: Vec<f64>) -> Self {
        let total: f64 = importances.iter().sum();
        if total > 0.0 {
            importances.iter_mut().for_each(|v| *v /= total);
        }
        let mut order: Vec<usize> = (0..importances.len()).collect();
        order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
        GiniRanking { order, importances }
    }

    /// CSV `rank,byte_value,importance`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["rank", "byte_value", "importance"])
            .map_err(|e| Error::csv(path, e))?;
        for (rank, &f) in self.order.iter().enumerate() {
            w.write_record([
                rank.to_string(),
                f.to_string(),
                self.importances[f].to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let field = |i: usize| rec.get(i).ok_or_else(|| Error::parse(path, "short row"));
            let feature: usize = field(1)?
                .parse()
                .map_err(|_| Error::parse(path, "bad byte_value"))?;
            let importance: f64 = field(2)?
                .parse()
                .map_err(|_| Error::parse(path, "bad importance"))?;
            rows.push((feature, importance));
        }
        let mut importances = vec![0.0; rows.len()];
        let mut order = Vec::with_capacity(rows.len());
        for (f, imp) in rows {
            if f >= importances.len() {
                return Err(Error::parse(path, "byte_value out of range"));
            }
            importances[f] = imp;
            order.push(f);
        }
        Ok(GiniRanking { order, importances })
    }
}

/// Column-wise `(min, max)` used to scale features into `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorms {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl FeatureNorms {
    pub fn new(mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self> {
        if mins.len() != maxs.len() {
            return Err(Error::DimensionMismatch {
                expected: mins.len(),
                actual: maxs.len(),
            });
        }
        Ok(FeatureNorms { mins, maxs })
    }

    pub fn len(&self) -> usize {
        self.mins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mins.is_empty()
    }

    pub fn range(&self, feature: usize) -> (f64, f64) {
        (self.mins[feature], self.maxs[feature])
    }

    /// `(v - min) / (max - min)`, or 0 for a constant column.
    pub fn normalize(&self, feature: usize, v: f64) -> f64 {
        let (lo, hi) = self.range(feature);
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    /// CSV `feature,min,max`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["feature", "min", "max"])
            .map_err(|e| Error::csv(path, e))?;
        for (i, (lo, hi)) in self.mins.iter().zip(&self.maxs).enumerate() {
            w.write_record([i.to_string(), lo.to_string(), hi.to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Column-wise min and max over `rows`.
pub fn feature_norms(rows: &[Vec<f64>]) -> Result<FeatureNorms> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidArgument("feature_norms of an empty matrix".into()))?;
    let mut mins = first.clone();
    let mut maxs = first.clone();
    for row in &rows[1..] {
        if row.len() != mins.len() {
            return Err(Error::DimensionMismatch {
                expected: mins.len(),
                actual: row.len(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    FeatureNorms::new(mins, maxs)
}
