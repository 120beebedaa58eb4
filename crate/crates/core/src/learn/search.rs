//! Seeded random search over the KNN hyperparameter space.
//!
//! Space: `k` in `1..=floor(sqrt(S))` for `S` training rows, weights
//! uniform/distance, metric euclidean/manhattan/minkowski, with `p` in {1, 3}
//! for minkowski and 2 otherwise.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::knn::{nearest, vote};
use super::{KnnModel, KnnParams, Metric, Weights};

type Neighbors = Vec<(f64, usize)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub params: KnnParams,
    pub correct: usize,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub model: KnnModel,
    pub best: Trial,
    pub trials: Vec<Trial>,
}

fn sample_params<R: Rng>(rng: &mut R, k_max: usize) -> KnnParams {
    let k = rng.random_range(1..=k_max);
    let weights = if rng.random_bool(0.5) {
        Weights::Uniform
    } else {
        Weights::Distance
    };
    let metric = Metric::ALL[rng.random_range(0..Metric::ALL.len())];
    let p = match metric {
        Metric::Minkowski => {
            if rng.random_bool(0.5) {
                1
            } else {
                3
            }
        }
        _ => 2,
    };
    KnnParams {
        k,
        weights,
        metric,
        p,
    }
}

// Higher accuracy first, then smaller k, uniform before distance, metric
// declaration order, smaller p.
fn preference(a: &Trial, b: &Trial) -> Ordering {
    b.correct
        .cmp(&a.correct)
        .then(a.params.k.cmp(&b.params.k))
        .then(a.params.weights.cmp(&b.params.weights))
        .then(a.params.metric.cmp(&b.params.metric))
        .then(a.params.p.cmp(&b.params.p))
}

/// Evaluate `budget` seeded random configurations on the validation set and
/// return the preferred one refit on the training set.
pub fn search_knn(
    train_x: &[Vec<f64>],
    train_y: &[String],
    val_x: &[Vec<f64>],
    val_y: &[String],
    budget: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if budget == 0 {
        return Err(Error::InvalidArgument(
            "search budget must be at least 1".into(),
        ));
    }
    if val_x.is_empty() {
        return Err(Error::InvalidArgument("empty validation set".into()));
    }
    if train_x.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if train_x.len() != train_y.len() || val_x.len() != val_y.len() {
        return Err(Error::InvalidArgument(
            "features and labels differ in length".into(),
        ));
    }
    let k_max = train_x.len().isqrt().max(1);
    let mut rng = seed::rng_for(seed, b"knn-search");

    // Neighbour lists up to k_max are shared by every trial with the same
    // distance function.
    let mut neighbor_cache: HashMap<(Metric, u32), Vec<Neighbors>> = HashMap::new();
    let mut trials = Vec::with_capacity(budget);
    for _ in 0..budget {
        let params = sample_params(&mut rng, k_max);
        let lists = neighbor_cache
            .entry((params.metric, params.p))
            .or_insert_with(|| {
                val_x
                    .par_iter()
                    .map(|q| nearest(train_x, q, params.metric, params.p, k_max))
                    .collect()
            });
        let correct = lists
            .iter()
            .zip(val_y)
            .filter(|(nn, truth)| {
                vote(&nn[..params.k.min(nn.len())], train_y, params.weights) == truth.as_str()
            })
            .count();
        trials.push(Trial {
            params,
            correct,
            val_accuracy: correct as f64 / val_y.len() as f64,
        });
    }
    let best = trials
        .iter()
        .min_by(|a, b| preference(a, b))
        .cloned()
        .expect("budget >= 1");
    let model = KnnModel::fit(train_x.to_vec(), train_y.to_vec(), best.params)?;
    Ok(SearchOutcome {
        model,
        best,
        trials,
    })
}
