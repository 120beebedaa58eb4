use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weights {
    Uniform,
    Distance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Minkowski,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Euclidean, Metric::Manhattan, Metric::Minkowski];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    pub weights: Weights,
    pub metric: Metric,
    /// Minkowski exponent: 1 or 3 for `minkowski`, 2 otherwise.
    pub p: u32,
}

impl fmt::Display for KnnParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} weights={:?} metric={:?}",
            self.k, self.weights, self.metric
        )?;
        if self.metric == Metric::Minkowski {
            write!(f, " p={}", self.p)?;
        }
        Ok(())
    }
}

impl KnnParams {
    pub fn validate(&self, train_size: usize) -> Result<()> {
        if self.k == 0 || self.k > train_size {
            return Err(Error::InvalidArgument(format!(
                "k={} outside 1..={train_size}",
                self.k
            )));
        }
        let p_ok = match self.metric {
            Metric::Minkowski => matches!(self.p, 1 | 3),
            _ => self.p == 2,
        };
        if !p_ok {
            return Err(Error::InvalidArgument(format!(
                "p={} not allowed for {:?}",
                self.p, self.metric
            )));
        }
        Ok(())
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        distance(self.metric, self.p, a, b)
    }
}

pub(crate) fn distance(metric: Metric, p: u32, a: &[f64], b: &[f64]) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    match (metric, p) {
        (Metric::Euclidean, _) => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        (Metric::Manhattan, _) | (Metric::Minkowski, 1) => diffs.sum(),
        (Metric::Minkowski, p) => {
            let p = p as f64;
            diffs.map(|d| d.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// The `k` nearest training rows as `(distance, index)`, ordered by distance
/// then index.
pub(crate) fn nearest(
    train: &[Vec<f64>],
    query: &[f64],
    metric: Metric,
    p: u32,
    k: usize,
) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, row)| (distance(metric, p, row, query), i))
        .collect();
    let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = k.min(all.len());
    if k < all.len() {
        all.select_nth_unstable_by(k, by);
        all.truncate(k);
    }
    all.sort_by(by);
    all
}

/// Vote among neighbours. Distance weighting uses `1/d`; if any neighbour is
/// at distance zero only the exact matches vote. Ties go to the
/// lexicographically smallest label.
pub(crate) fn vote<'a>(
    neighbors: &[(f64, usize)],
    labels: &'a [String],
    weights: Weights,
) -> &'a str {
    let exact = weights == Weights::Distance && neighbors.iter().any(|&(d, _)| d == 0.0);
    let mut tally: BTreeMap<&str, f64> = BTreeMap::new();
    for &(d, i) in neighbors {
        let w = match weights {
            Weights::Uniform => 1.0,
            Weights::Distance if exact => {
                if d == 0.0 {
                    1.0
                } else {
                    continue;
                }
            }
            Weights::Distance => 1.0 / d,
        };
        *tally.entry(labels[i].as_str()).or_insert(0.0) += w;
    }
    let mut best: Option<(&str, f64)> = None;
    for (label, w) in tally {
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((label, w));
        }
    }
    best.map(|(l, _)| l).unwrap_or_default()
}

#[derive(Clone, Debug)]
pub struct KnnModel {
    features: Vec<Vec<f64>>,
    labels: Vec<String>,
    params: KnnParams,
    dims: usize,
}

impl KnnModel {
    pub fn fit(features: Vec<Vec<f64>>, labels: Vec<String>, params: KnnParams) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        params.validate(features.len())?;
        let dims = features[0].len();
        if let Some(bad) = features.iter().find(|r| r.len() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: bad.len(),
            });
        }
        Ok(KnnModel {
            features,
            labels,
            params,
            dims,
        })
    }

    pub fn params(&self) -> KnnParams {
        self.params
    }

    pub fn train_size(&self) -> usize {
        self.features.len()
    }

    pub fn predict(&self, query: &[f64]) -> Result<String> {
        if query.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: query.len(),
            });
        }
        let p = self.params;
        let nn = nearest(&self.features, query, p.metric, p.p, p.k);
        Ok(vote(&nn, &self.labels, p.weights).to_string())
    }

    pub fn predict_batch(&self, queries: &[Vec<f64>]) -> Result<Vec<String>> {
        queries.par_iter().map(|q| self.predict(q)).collect()
    }
}
