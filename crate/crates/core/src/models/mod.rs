//! Desk-scale classifiers (random forest, linear and RBF SVM), metrics,
//! grid tuning and the PCA baseline.

mod forest;
mod pca;
mod svm;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub use forest::{RandomForest, TreeParams};
pub use pca::{pca_baseline, Pca, PcaBaseline, PcaRow};
pub use svm::{Kernel, Svm, SMO_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    RandomForest,
    SvmLinear,
    SvmRbf,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::RandomForest,
        ClassifierKind::SvmLinear,
        ClassifierKind::SvmRbf,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    RandomForest {
        n_trees: usize,
        /// `None` grows trees until leaves are pure.
        max_depth: Option<usize>,
        min_leaf: usize,
        seed: u64,
    },
    SvmLinear {
        c: f64,
    },
    SvmRbf {
        c: f64,
        gamma: f64,
    },
}

impl ClassifierSpec {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierSpec::RandomForest { .. } => ClassifierKind::RandomForest,
            ClassifierSpec::SvmLinear { .. } => ClassifierKind::SvmLinear,
            ClassifierSpec::SvmRbf { .. } => ClassifierKind::SvmRbf,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ClassifierSpec::RandomForest {
                n_trees,
                max_depth,
                min_leaf,
                ..
            } => n_trees > 0 && min_leaf > 0 && max_depth != Some(0),
            ClassifierSpec::SvmLinear { c } => c > 0.0 && c.is_finite(),
            ClassifierSpec::SvmRbf { c, gamma } => c > 0.0 && c.is_finite() && gamma > 0.0 && gamma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("non-positive hyperparameter in {self:?}")))
        }
    }
}

/// Per-column centering and scaling fitted on Train rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut mean = Vec::with_capacity(d);
        let mut scale = Vec::with_capacity(d);
        for j in 0..d {
            let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
            mean.push(stats::mean(&col));
            let s = stats::std_dev(&col);
            scale.push(if s > 0.0 { s } else { 1.0 });
        }
        Standardizer { mean, scale }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.apply_row(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Inner {
    Forest(RandomForest),
    Svm(Svm),
}

/// A trained classifier; immutable and shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ClassifierSpec,
    n_features: usize,
    standardizer: Option<Standardizer>,
    inner: Inner,
}

impl Model {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let scaled;
        let row = match &self.standardizer {
            Some(s) => {
                scaled = s.apply_row(row);
                &scaled[..]
            }
            None => row,
        };
        match &self.inner {
            Inner::Forest(f) => f.predict(row),
            Inner::Svm(s) => s.predict(row),
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<u8>> {
        if let Some(r) = x.iter().find(|r| r.len() != self.n_features) {
            return Err(Error::ColumnMismatch {
                expected: self.n_features,
                got: r.len(),
            });
        }
        Ok(x.iter().map(|r| self.predict_row(r)).collect())
    }

    /// Dual variables when the model is an SVM.
    pub fn svm(&self) -> Option<&Svm> {
        match &self.inner {
            Inner::Svm(s) => Some(s),
            Inner::Forest(_) => None,
        }
    }
}

fn check_training_data(x: &[Vec<f64>], y: &[u8]) -> Result<usize> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Data(format!(
            "training needs matching non-empty rows and labels ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::Data("training rows have no features".into()));
    }
    for r in x {
        if r.len() != d {
            return Err(Error::ColumnMismatch {
                expected: d,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite training value".into()));
        }
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::NonBinaryLabel {
            label: y.iter().find(|&&l| l > 1).expect("present").to_string(),
        });
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::SingleClass);
    }
    Ok(d)
}

/// Trains a classifier; SVM inputs are standardized with Train statistics.
pub fn train(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[u8]) -> Result<Model> {
    train_with(spec, x, y, true)
}

/// As [`train`], with SVM standardization optional (the PCA baseline feeds
/// projections whose relative scale is meaningful).
pub fn train_with(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[u8], standardize_svm: bool) -> Result<Model> {
    spec.validate()?;
    let d = check_training_data(x, y)?;
    let (standardizer, inner) = match *spec {
        ClassifierSpec::RandomForest {
            n_trees,
            max_depth,
            min_leaf,
            seed,
        } => {
            let params = TreeParams {
                max_depth,
                min_leaf,
                max_features: ((d as f64).sqrt().floor() as usize).max(1),
            };
            (None, Inner::Forest(RandomForest::fit(x, y, n_trees, params, seed)))
        }
        ClassifierSpec::SvmLinear { c } | ClassifierSpec::SvmRbf { c, .. } => {
            let kernel = match *spec {
                ClassifierSpec::SvmRbf { gamma, .. } => Kernel::Rbf { gamma },
                _ => Kernel::Linear,
            };
            if standardize_svm {
                let s = Standardizer::fit(x);
                let xs = s.apply(x);
                (Some(s), Inner::Svm(Svm::fit(&xs, y, kernel, c)))
            } else {
                (None, Inner::Svm(Svm::fit(x, y, kernel, c)))
            }
        }
    };
    Ok(Model {
        spec: spec.clone(),
        n_features: d,
        standardizer,
        inner,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Accuracy,
    Sensitivity,
    Specificity,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Sensitivity => "sensitivity",
            Metric::Specificity => "specificity",
        }
    }
}

/// A metric value with its confusion counts; class 0 is the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub value: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MetricReport {
    pub fn from_counts(metric: Metric, tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let value = match metric {
            Metric::Accuracy => ratio(tp + tn, tp + fp + tn + fn_),
            Metric::Sensitivity => ratio(tp, tp + fn_),
            Metric::Specificity => ratio(tn, tn + fp),
        };
        MetricReport {
            metric,
            value,
            tp,
            fp,
            tn,
            fn_,
        }
    }

    pub fn from_predictions(metric: Metric, predicted: &[u8], actual: &[u8]) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (0, 0) => tp += 1,
                (0, _) => fp += 1,
                (_, 0) => fn_ += 1,
                _ => tn += 1,
            }
        }
        Self::from_counts(metric, tp, fp, tn, fn_)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn evaluate(model: &Model, x: &[Vec<f64>], y: &[u8], metric: Metric) -> Result<MetricReport> {
    let pred = model.predict(x)?;
    Ok(MetricReport::from_predictions(metric, &pred, y))
}

fn default_c() -> Vec<f64> {
    vec![1.0, 10.0, 0.1]
}
fn default_gamma() -> Vec<f64> {
    vec![0.1, 1.0, 0.01]
}
fn default_trees() -> Vec<usize> {
    vec![50, 200]
}
fn default_depth() -> Vec<Option<usize>> {
    vec![Some(8), None]
}
fn default_min_leaf() -> usize {
    1
}

/// Hyperparameter lists; grid points are visited in list order, so the
/// first entries form the fallback spec when the budget allows only one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default = "default_c")]
    pub c: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: Vec<f64>,
    #[serde(default = "default_trees")]
    pub n_trees: Vec<usize>,
    #[serde(default = "default_depth")]
    pub max_depth: Vec<Option<usize>>,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            c: default_c(),
            gamma: default_gamma(),
            n_trees: default_trees(),
            max_depth: default_depth(),
            min_leaf: default_min_leaf(),
        }
    }
}

impl Grid {
    pub fn points(&self, kind: ClassifierKind, seed: u64) -> Vec<ClassifierSpec> {
        match kind {
            ClassifierKind::RandomForest => self
                .n_trees
                .iter()
                .flat_map(|&n_trees| {
                    self.max_depth.iter().map(move |&max_depth| ClassifierSpec::RandomForest {
                        n_trees,
                        max_depth,
                        min_leaf: self.min_leaf,
                        seed,
                    })
                })
                .collect(),
            ClassifierKind::SvmLinear => self.c.iter().map(|&c| ClassifierSpec::SvmLinear { c }).collect(),
            ClassifierKind::SvmRbf => self
                .c
                .iter()
                .flat_map(|&c| self.gamma.iter().map(move |&gamma| ClassifierSpec::SvmRbf { c, gamma }))
                .collect(),
        }
    }
}

/// Limits on tuning effort. The evaluation count keeps results
/// reproducible; the wall-clock limit trades that for bounded time. At
/// least one grid point is always evaluated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningBudget {
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    #[serde(default)]
    pub wall_clock_s: Option<f64>,
}

impl TuningBudget {
    pub fn evaluations(n: usize) -> Self {
        TuningBudget {
            max_evaluations: Some(n),
            wall_clock_s: None,
        }
    }

    pub fn unlimited() -> Self {
        TuningBudget::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    pub spec: ClassifierSpec,
    pub eval: MetricReport,
    pub evaluated: usize,
}

/// Visits grid points in order until the budget runs out and keeps the best
/// on Eval (earlier point on ties).
#[allow(clippy::too_many_arguments)]
pub fn tune(
    kind: ClassifierKind,
    x_train: &[Vec<f64>],
    y_train: &[u8],
    x_eval: &[Vec<f64>],
    y_eval: &[u8],
    grid: &Grid,
    budget: &TuningBudget,
    metric: Metric,
    seed: u64,
) -> Result<Tuned> {
    let points = grid.points(kind, seed);
    if points.is_empty() {
        return Err(Error::Config(format!("empty grid for {kind:?}")));
    }
    if budget.wall_clock_s.is_some_and(|s| !(s > 0.0)) || budget.max_evaluations == Some(0) {
        return Err(Error::Config("tuning budget must be positive".into()));
    }
    let start = Instant::now();
    let mut best: Option<Tuned> = None;
    for (n, spec) in points.into_iter().enumerate() {
        if n > 0 {
            let over_count = budget.max_evaluations.is_some_and(|m| n >= m);
            let over_time = budget
                .wall_clock_s
                .is_some_and(|s| start.elapsed().as_secs_f64() >= s);
            if over_count || over_time {
                break;
            }
        }
        let model = train(&spec, x_train, y_train)?;
        let report = evaluate(&model, x_eval, y_eval, metric)?;
        if best.as_ref().is_none_or(|b| report.value > b.eval.value) {
            best = Some(Tuned {
                spec,
                eval: report,
                evaluated: n + 1,
            });
        }
        if let Some(b) = best.as_mut() {
            b.evaluated = n + 1;
        }
    }
    Ok(best.expect("first grid point always evaluated"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let l = (i % 2) as u8;
            let c = if l == 0 { -sep } else { sep };
            x.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
            y.push(l);
        }
        (x, y)
    }

    fn xor() -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0, 0, 1, 1],
        )
    }

    #[test]
    fn linear_svm_separates_blobs() {
        let (x, y) = blobs(60, 3.0, 1);
        let m = train(&ClassifierSpec::SvmLinear { c: 1.0 }, &x, &y).unwrap();
        assert_eq!(evaluate(&m, &x, &y, Metric::Accuracy).unwrap().value, 1.0);
    }

    #[test]
    fn xor_needs_rbf() {
        let (x, y) = xor();
        let rbf = train(&ClassifierSpec::SvmRbf { c: 10.0, gamma: 1.0 }, &x, &y).unwrap();
        assert_eq!(evaluate(&rbf, &x, &y, Metric::Accuracy).unwrap().value, 1.0);
        let lin = train(&ClassifierSpec::SvmLinear { c: 10.0 }, &x, &y).unwrap();
        assert!(evaluate(&lin, &x, &y, Metric::Accuracy).unwrap().value <= 0.75);
    }

    #[test]
    fn stump_separates_threshold_set() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 12)).collect();
        let spec = ClassifierSpec::RandomForest {
            n_trees: 1,
            max_depth: Some(1),
            min_leaf: 1,
            seed: 0,
        };
        // with two features a single tree samples one of them; seeds vary which
        let x1: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0]]).collect();
        let m = train(&spec, &x1, &y).unwrap();
        assert_eq!(evaluate(&m, &x1, &y, Metric::Accuracy).unwrap().value, 1.0);
    }

    #[test]
    fn forest_is_deterministic() {
        let (x, y) = blobs(80, 0.6, 2);
        let spec = ClassifierSpec::RandomForest {
            n_trees: 25,
            max_depth: None,
            min_leaf: 1,
            seed: 9,
        };
        let a = train(&spec, &x, &y).unwrap();
        let b = train(&spec, &x, &y).unwrap();
        assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let err = train(&ClassifierSpec::SvmLinear { c: 1.0 }, &[vec![1.0], vec![2.0]], &[1, 1]).unwrap_err();
        assert!(matches!(err, Error::SingleClass));
    }

    #[test]
    fn column_mismatch_on_evaluate() {
        let (x, y) = blobs(10, 3.0, 3);
        let m = train(&ClassifierSpec::SvmLinear { c: 1.0 }, &x, &y).unwrap();
        let err = evaluate(&m, &[vec![1.0]], &[0], Metric::Accuracy).unwrap_err();
        assert!(matches!(err, Error::ColumnMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn metric_definitions() {
        let perfect = MetricReport::from_predictions(Metric::Accuracy, &[0, 1, 1], &[0, 1, 1]);
        assert_eq!((perfect.value, perfect.fp, perfect.fn_), (1.0, 0, 0));
        let y: Vec<u8> = (0..647).map(|i| u8::from(i >= 282)).collect();
        let all_one = MetricReport::from_predictions(Metric::Accuracy, &vec![1; 647], &y);
        assert!((all_one.value - 365.0 / 647.0).abs() < 1e-15);
        assert!((all_one.value - 0.564).abs() < 5e-4);
        assert_eq!(MetricReport::from_counts(Metric::Sensitivity, 9, 0, 0, 1).value, 0.9);
    }

    #[test]
    fn tiny_budget_returns_first_point() {
        let (x, y) = blobs(40, 0.3, 4);
        let grid = Grid::default();
        let t = tune(ClassifierKind::SvmRbf, &x, &y, &x, &y, &grid, &TuningBudget::evaluations(1), Metric::Accuracy, 0).unwrap();
        assert_eq!(t.spec, grid.points(ClassifierKind::SvmRbf, 0)[0]);
        assert_eq!(t.evaluated, 1);
        let t = tune(
            ClassifierKind::SvmRbf,
            &x,
            &y,
            &x,
            &y,
            &grid,
            &TuningBudget { max_evaluations: None, wall_clock_s: Some(1e-12) },
            Metric::Accuracy,
            0,
        )
        .unwrap();
        assert_eq!(t.evaluated, 1);
    }

    #[test]
    fn tuning_prefers_larger_c_on_pocket_fixture() {
        // a narrow class-0 pocket inside class-1 territory: a soft margin
        // (small C) gives it up, Eval rewards fitting it
        let mut xt = Vec::new();
        let mut yt = Vec::new();
        for i in 0..=100 {
            let v = i as f64 * 0.01;
            xt.push(vec![-v - 0.01]);
            yt.push(0);
            if !(0.49..0.515).contains(&v) {
                xt.push(vec![v]);
                yt.push(1);
            }
        }
        for v in [0.495, 0.5, 0.505] {
            xt.push(vec![v]);
            yt.push(0);
        }
        let xe = vec![vec![0.4975], vec![0.5025], vec![0.3], vec![0.7], vec![-0.5]];
        let ye = vec![0, 0, 1, 1, 0];
        let grid = Grid {
            c: vec![0.1, 10.0],
            gamma: vec![500.0],
            ..Grid::default()
        };
        let run = || {
            tune(ClassifierKind::SvmRbf, &xt, &yt, &xe, &ye, &grid, &TuningBudget::unlimited(), Metric::Accuracy, 0).unwrap()
        };
        let t = run();
        assert_eq!(t.spec, ClassifierSpec::SvmRbf { c: 10.0, gamma: 500.0 });
        assert_eq!(t.eval.value, 1.0);
        assert_eq!(t, run());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn svm_dual_stays_feasible(seed in 0u64..10_000, c in prop::sample::select(vec![0.1, 1.0, 10.0]), rbf in any::<bool>()) {
            let (x, y) = blobs(40, 0.4, seed);
            let spec = if rbf { ClassifierSpec::SvmRbf { c, gamma: 0.5 } } else { ClassifierSpec::SvmLinear { c } };
            let m = train(&spec, &x, &y).unwrap();
            let svm = m.svm().unwrap();
            let mut s = 0.0;
            for (a, &l) in svm.alpha.iter().zip(&y) {
                prop_assert!(*a >= 0.0 && *a <= c);
                s += a * if l == 0 { 1.0 } else { -1.0 };
            }
            prop_assert!(s.abs() <= 1e-6);
        }

        #[test]
        fn reports_are_consistent(pred in prop::collection::vec(0u8..2, 1..60), seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let actual: Vec<u8> = pred.iter().map(|_| rng.random_range(0..2)).collect();
            for metric in [Metric::Accuracy, Metric::Sensitivity, Metric::Specificity] {
                let r = MetricReport::from_predictions(metric, &pred, &actual);
                prop_assert_eq!(r.total(), pred.len());
                prop_assert!((0.0..=1.0).contains(&r.value));
                let recomputed = MetricReport::from_counts(metric, r.tp, r.fp, r.tn, r.fn_);
                prop_assert_eq!(recomputed.value, r.value);
            }
        }
    }
}
