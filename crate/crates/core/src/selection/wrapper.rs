//! Classifier-in-loop subset scoring.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::Result;
use crate::models::{evaluate, train, tune, ClassifierKind, ClassifierSpec, Grid, Metric, MetricReport, TuningBudget};

/// One fold's view of a feature matrix.
#[derive(Debug, Clone)]
pub struct FoldData<'a> {
    pub fold: usize,
    /// `columns[feature][instance]` over the whole dataset.
    pub columns: &'a [Vec<f64>],
    pub labels: &'a [u8],
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
}

impl FoldData<'_> {
    pub fn rows(&self, rows: &[usize], set: &[usize]) -> (Vec<Vec<f64>>, Vec<u8>) {
        let x = rows
            .iter()
            .map(|&r| set.iter().map(|&f| self.columns[f][r]).collect())
            .collect();
        let y = rows.iter().map(|&r| self.labels[r]).collect();
        (x, y)
    }
}

/// Scores keyed by fold and sorted feature set; concurrent lookups see a
/// single map and a score is stored once.
#[derive(Debug, Default)]
pub struct WrapperMemo {
    map: Mutex<HashMap<(usize, Vec<usize>), f64>>,
    computed: AtomicUsize,
}

impl WrapperMemo {
    pub fn new() -> Self {
        WrapperMemo::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of scores actually computed (memo misses).
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    fn get_or_try_insert(&self, key: (usize, Vec<usize>), f: impl FnOnce() -> Result<f64>) -> Result<f64> {
        if let Some(&v) = self.map.lock().expect("memo lock").get(&key) {
            return Ok(v);
        }
        let v = f()?;
        self.computed.fetch_add(1, Ordering::Relaxed);
        Ok(*self.map.lock().expect("memo lock").entry(key).or_insert(v))
    }
}

/// Tuning settings used inside the wrapper loop.
#[derive(Debug, Clone, PartialEq)]
pub struct WrapperSettings {
    pub grid: Grid,
    pub budget: TuningBudget,
    pub metric: Metric,
    pub seed: u64,
}

/// Best Eval metric over a random forest, a linear SVM and an RBF SVM, each
/// tuned on Train restricted to `set` within the budget.
pub fn wrapper_score(set: &[usize], fold: &FoldData, settings: &WrapperSettings, memo: &WrapperMemo) -> Result<f64> {
    let mut key: Vec<usize> = set.to_vec();
    key.sort_unstable();
    key.dedup();
    memo.get_or_try_insert((fold.fold, key.clone()), || {
        let (xt, yt) = fold.rows(&fold.train, &key);
        let (xe, ye) = fold.rows(&fold.eval, &key);
        let mut best = f64::NEG_INFINITY;
        for kind in ClassifierKind::ALL {
            let t = tune(kind, &xt, &yt, &xe, &ye, &settings.grid, &settings.budget, settings.metric, settings.seed)?;
            best = best.max(t.eval.value);
        }
        Ok(best)
    })
}

/// Eval reports of fixed specs on `set`, in the order of `specs`.
pub fn score_with_specs(set: &[usize], fold: &FoldData, specs: &[ClassifierSpec], metric: Metric) -> Result<Vec<MetricReport>> {
    let (xt, yt) = fold.rows(&fold.train, set);
    let (xe, ye) = fold.rows(&fold.eval, set);
    specs
        .iter()
        .map(|s| evaluate(&train(s, &xt, &yt)?, &xe, &ye, metric))
        .collect()
}

/// First report with the highest value.
pub fn best_report(reports: &[MetricReport]) -> usize {
    let mut best = 0;
    for (i, r) in reports.iter().enumerate() {
        if r.value > reports[best].value {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn settings() -> WrapperSettings {
        WrapperSettings {
            grid: Grid::default(),
            budget: TuningBudget::evaluations(1),
            metric: Metric::Accuracy,
            seed: 5,
        }
    }

    fn noise_columns(n_features: usize, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = (0..n_features).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels = (0..n).map(|i| (i % 2) as u8).collect();
        (cols, labels)
    }

    #[test]
    fn separating_feature_scores_one_and_order_is_irrelevant() {
        let (mut cols, labels) = noise_columns(3, 80, 1);
        cols[1] = labels.iter().map(|&l| f64::from(l) * 2.0 - 1.0).collect();
        let fold = FoldData {
            fold: 0,
            columns: &cols,
            labels: &labels,
            train: (0..60).collect(),
            eval: (60..80).collect(),
        };
        let memo = WrapperMemo::new();
        assert_eq!(wrapper_score(&[1], &fold, &settings(), &memo).unwrap(), 1.0);
        let a = wrapper_score(&[0, 1, 2], &fold, &settings(), &memo).unwrap();
        let b = wrapper_score(&[2, 0, 1], &fold, &settings(), &memo).unwrap();
        assert_eq!(a, b);
        assert_eq!(memo.computed(), 2);
        assert_eq!(memo.len(), 2);
    }

    #[test]
    fn pure_noise_scores_near_chance() {
        let mut total = 0.0;
        let runs = 8;
        for seed in 0..runs {
            let (cols, labels) = noise_columns(3, 300, 40 + seed);
            let fold = FoldData {
                fold: 0,
                columns: &cols,
                labels: &labels,
                train: (0..100).collect(),
                eval: (100..300).collect(),
            };
            total += wrapper_score(&[0, 1, 2], &fold, &settings(), &WrapperMemo::new()).unwrap();
        }
        let mean = total / runs as f64;
        assert!((mean - 0.5).abs() <= 0.15, "mean noise score {mean}");
    }
}
