//! CART random forest grown only for its mean-decrease-in-impurity importances.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::GiniRanking;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub trees: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(feature count))`.
    pub max_features: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            max_features: None,
            min_leaf: 1,
            seed: 42,
        }
    }
}

impl ForestConfig {
    pub fn resolved_max_features(&self, n_features: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
    }
}

struct Data<'a> {
    rows: &'a [Vec<f64>],
    classes: Vec<usize>,
    n_classes: usize,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

struct Split {
    feature: usize,
    // position in the sorted node where the right child starts
    cut: usize,
    decrease: f64,
    sorted: Vec<usize>,
}

/// Best split on one feature, or `None` when no cut respects `min_leaf`
/// between two distinct values.
fn best_cut(
    data: &Data,
    node: &[usize],
    feature: usize,
    parent_gini: f64,
    min_leaf: usize,
) -> Option<Split> {
    let mut sorted = node.to_vec();
    sorted.sort_by(|&a, &b| data.rows[a][feature].total_cmp(&data.rows[b][feature]));
    let n = sorted.len();
    let mut left = vec![0usize; data.n_classes];
    let mut right = vec![0usize; data.n_classes];
    for &i in &sorted {
        right[data.classes[i]] += 1;
    }
    let mut best: Option<(usize, f64)> = None;
    for cut in 1..n {
        let moved = data.classes[sorted[cut - 1]];
        left[moved] += 1;
        right[moved] -= 1;
        if cut < min_leaf || n - cut < min_leaf {
            continue;
        }
        if data.rows[sorted[cut - 1]][feature] >= data.rows[sorted[cut]][feature] {
            continue;
        }
        let (nl, nr) = (cut as f64, (n - cut) as f64);
        let child = (nl * gini(&left, cut) + nr * gini(&right, n - cut)) / n as f64;
        let decrease = parent_gini - child;
        if best.is_none_or(|(_, d)| decrease > d) {
            best = Some((cut, decrease));
        }
    }
    best.map(|(cut, decrease)| Split {
        feature,
        cut,
        decrease,
        sorted,
    })
}

fn grow_tree(data: &Data, cfg: &ForestConfig, mtry: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n_rows = data.rows.len();
    let n_features = data.rows[0].len();
    let mut importances = vec![0.0; n_features];
    let root: Vec<usize> = (0..n_rows).map(|_| rng.random_range(0..n_rows)).collect();
    let root_n = root.len() as f64;
    let mut features: Vec<usize> = (0..n_features).collect();

    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        let n = node.len();
        if n < 2 * cfg.min_leaf.max(1) {
            continue;
        }
        let mut counts = vec![0usize; data.n_classes];
        for &i in &node {
            counts[data.classes[i]] += 1;
        }
        let impurity = gini(&counts, n);
        if impurity <= 0.0 {
            continue;
        }
        // Visit features in random order until `mtry` of them admit a cut;
        // features that are constant within the node do not count.
        features.shuffle(rng);
        let mut best: Option<Split> = None;
        let mut usable = 0;
        for &f in &features {
            if usable >= mtry {
                break;
            }
            if let Some(split) = best_cut(data, &node, f, impurity, cfg.min_leaf.max(1)) {
                usable += 1;
                if best.as_ref().is_none_or(|b| split.decrease > b.decrease) {
                    best = Some(split);
                }
            }
        }
        let Some(split) = best else { continue };
        importances[split.feature] += (n as f64 / root_n) * split.decrease;
        let Split {
            cut, mut sorted, ..
        } = split;
        let right = sorted.split_off(cut);
        stack.push(right);
        stack.push(sorted);
    }
    importances
}

/// Grow a bootstrap forest of Gini-split CART trees and rank features by
/// mean impurity decrease.
///
/// Each tree draws from its own RNG seeded by `hash(cfg.seed, tree index)`,
/// so the result does not depend on thread scheduling.
pub fn fit_forest(rows: &[Vec<f64>], labels: &[String], cfg: &ForestConfig) -> Result<GiniRanking> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "fit_forest on an empty matrix".into(),
        ));
    }
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    let n_features = rows[0].len();
    if n_features == 0 {
        return Err(Error::InvalidArgument("rows have no features".into()));
    }
    for row in rows {
        if row.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
    }
    if cfg.trees == 0 {
        return Err(Error::InvalidArgument(
            "forest needs at least one tree".into(),
        ));
    }
    let mtry = cfg.resolved_max_features(n_features);
    if mtry == 0 || mtry > n_features {
        return Err(Error::InvalidArgument(format!(
            "max_features {mtry} outside 1..={n_features}"
        )));
    }

    let mut class_ids = BTreeMap::new();
    for l in labels {
        let next = class_ids.len();
        class_ids.entry(l.as_str()).or_insert(next);
    }
    if class_ids.len() < 2 {
        return Err(Error::InvalidArgument(
            "fit_forest needs at least two classes".into(),
        ));
    }
    let data = Data {
        rows,
        classes: labels.iter().map(|l| class_ids[l.as_str()]).collect(),
        n_classes: class_ids.len(),
    };

    let per_tree: Vec<Vec<f64>> = (0..cfg.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng_for(cfg.seed, &(t as u64).to_le_bytes());
            grow_tree(&data, cfg, mtry, &mut rng)
        })
        .collect();

    let mut mean = vec![0.0; n_features];
    for tree in &per_tree {
        for (m, v) in mean.iter_mut().zip(tree) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= cfg.trees as f64);
    Ok(GiniRanking::from_importances(mean))
}
