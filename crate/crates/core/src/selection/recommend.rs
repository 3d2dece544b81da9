//! Level-by-level recommendation with escalation under the threshold tau.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::SignalDataset;
use crate::error::{Error, Result};
use crate::features::{build_feature_pool, mapping_table, FeatureConfig, FeatureDef, FeaturePool, MappingTable};
use crate::interpret::ExpertWeights;
use crate::models::{evaluate, train, tune, ClassifierKind, ClassifierSpec, Grid, Metric, MetricReport, TuningBudget};
use crate::partition::{derive_seed, FoldPlan, Role};

use super::filter::{mrmr_rank, mrms_rank};
use super::mi::{mutual_information, BinCount, Discretizer};
use super::search::{choose_fe1, choose_fe2, search_subsets, SubsetScore};
use super::wrapper::{best_report, score_with_specs, wrapper_score, FoldData, WrapperMemo, WrapperSettings};

pub const SCHEMA_VERSION: u32 = 1;
/// Largest k accepted; beyond it the subset search is impractical.
pub const MAX_K: usize = 20;

fn default_k() -> usize {
    10
}
fn default_c() -> u64 {
    1 << 20
}
fn default_tau() -> f64 {
    0.98
}
fn default_prefilter() -> usize {
    2000
}
fn default_wrapper_budget() -> TuningBudget {
    TuningBudget::evaluations(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    /// Target size of the recommended sets.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Subset evaluations allowed in the exhaustive stage.
    #[serde(default = "default_c")]
    pub c: u64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default = "default_prefilter")]
    pub prefilter_p: usize,
    #[serde(default)]
    pub bins: BinCount,
    #[serde(default)]
    pub expert_weights: ExpertWeights,
    #[serde(default)]
    pub grid: Grid,
    /// Tuning effort per classifier inside the wrapper loop.
    #[serde(default = "default_wrapper_budget")]
    pub wrapper_budget: TuningBudget,
    /// Tuning effort for the specs used by the subset search.
    #[serde(default)]
    pub tuning_budget: TuningBudget,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k: default_k(),
            c: default_c(),
            tau: default_tau(),
            metric: Metric::default(),
            prefilter_p: default_prefilter(),
            bins: BinCount::default(),
            expert_weights: ExpertWeights::default(),
            grid: Grid::default(),
            wrapper_budget: default_wrapper_budget(),
            tuning_budget: TuningBudget::default(),
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_K).contains(&self.k) {
            return Err(Error::Config(format!("k must be in 2..={MAX_K}, got {}", self.k)));
        }
        if self.c == 0 {
            return Err(Error::Config("c must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau must be in (0, 1], got {}", self.tau)));
        }
        if self.prefilter_p == 0 {
            return Err(Error::Config("prefilter_p must be positive".into()));
        }
        self.expert_weights.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedKey {
    pub key: String,
    pub score: f64,
}

/// Every ranking stage of one fold at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldStages {
    pub fold: usize,
    pub candidates: usize,
    /// Columns constant on Train, left out of ranking.
    pub constant_on_train: usize,
    pub prefiltered: usize,
    pub mrmr: Vec<RankedKey>,
    pub mrms: Vec<RankedKey>,
    pub union: Vec<String>,
    /// Wrapper forward order; scores are those of each growing prefix.
    pub wrapper: Vec<RankedKey>,
    /// Size of the best-scoring wrapper prefix.
    pub wrapper_best_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: u8,
    pub n_features: usize,
    /// Mother wavelet chosen on each fold's Train windows.
    pub wavelets: Vec<String>,
    pub folds: Vec<FoldStages>,
    /// Cross-fold consensus of the wrapper-ranked lists, searched exhaustively.
    pub consensus: Vec<String>,
    /// Tuned random forest, linear SVM and RBF SVM specs per fold.
    pub tuned: Vec<Vec<ClassifierSpec>>,
    pub subsets_evaluated: usize,
    pub greedy_fallback: bool,
    /// Best single-fold Eval metric over all subsets.
    pub best_single_fold: f64,
    /// Best worst-fold Eval metric over all subsets; compared with tau.
    pub best_worst_fold: f64,
    pub met_tau: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub classifier: ClassifierSpec,
    pub eval: MetricReport,
    /// Hidden Test result after retraining on Train and Eval.
    pub test: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommended {
    pub feature_ids: Vec<usize>,
    pub keys: Vec<String>,
    pub eval_best: f64,
    pub eval_worst: f64,
    pub eval_mean: f64,
    pub folds: Vec<FoldOutcome>,
}

/// Work counters; levels are indexed from 1 at position 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instrumentation {
    pub pool_builds: [usize; 3],
    pub level_selections: [usize; 3],
    pub wrapper_fits: usize,
    pub subset_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationResult {
    pub schema_version: u32,
    pub seed: u64,
    pub n_folds: usize,
    pub level_reached: u8,
    pub levels: Vec<LevelReport>,
    pub fe1: Recommended,
    pub fe2: Recommended,
    pub instrumentation: Instrumentation,
    pub selection: SelectionConfig,
    pub features: FeatureConfig,
}

/// A finished run: the result plus the mapping table and columns of the
/// final level (ids in the result index both).
#[derive(Debug, Clone)]
pub struct Recommendation {
    pub result: RecommendationResult,
    pub table: MappingTable,
    pub columns: Vec<Vec<f64>>,
}

/// Union of the fold pools of one level, in canonical key order.
struct LevelPool {
    table: MappingTable,
    columns: Vec<Vec<f64>>,
    /// Union indices of each fold's own pool.
    members: Vec<Vec<usize>>,
    wavelets: Vec<String>,
}

fn union_pool(pools: Vec<FeaturePool>) -> Result<LevelPool> {
    let context = pools
        .first()
        .map(|p| p.table.context.clone())
        .ok_or_else(|| Error::Invariant("no fold pools".into()))?;
    let wavelets = pools.iter().map(|p| p.wavelet.wavelet_name.clone()).collect();
    let fold_keys: Vec<Vec<String>> = pools
        .iter()
        .map(|p| p.table.records.iter().map(|r| r.key.clone()).collect())
        .collect();
    let mut merged: BTreeMap<String, (FeatureDef, Vec<String>, Vec<f64>)> = BTreeMap::new();
    for pool in pools {
        let FeaturePool { matrix, table, .. } = pool;
        for (record, column) in table.records.into_iter().zip(matrix.columns) {
            merged
                .entry(record.key)
                .or_insert((record.definition, record.flags, column));
        }
    }
    let index: BTreeMap<&String, usize> = merged.keys().enumerate().map(|(i, k)| (k, i)).collect();
    let members = fold_keys
        .iter()
        .map(|keys| keys.iter().map(|k| index[k]).collect())
        .collect();
    let mut defs = Vec::with_capacity(merged.len());
    let mut flags = Vec::with_capacity(merged.len());
    let mut columns = Vec::with_capacity(merged.len());
    for (_, (d, f, c)) in merged {
        defs.push(d);
        flags.push(f);
        columns.push(c);
    }
    Ok(LevelPool {
        table: mapping_table(&defs, &flags, &context)?,
        columns,
        members,
        wavelets,
    })
}

struct Ranked {
    stages: FoldStages,
    order: Vec<usize>,
}

/// Prefilter, mRMR and MRMS, their union, then wrapper forward selection
/// down to `k` on one fold.
fn rank_fold(
    fold: &FoldData,
    candidates: &[usize],
    weights: &[f64],
    keys: &[String],
    cfg: &SelectionConfig,
    settings: &WrapperSettings,
    memo: &WrapperMemo,
) -> Result<Ranked> {
    let key = |f: usize| keys[f].clone();
    let train = &fold.train;
    let y: Vec<u32> = train.iter().map(|&i| u32::from(fold.labels[i])).collect();
    let live: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&f| {
            let c = &fold.columns[f];
            train.iter().any(|&i| c[i] != c[train[0]])
        })
        .collect();
    let bins = cfg.bins.resolve(train.len());
    let discrete: Vec<Vec<u32>> = live
        .par_iter()
        .map(|&f| {
            let v: Vec<f64> = train.iter().map(|&i| fold.columns[f][i]).collect();
            Discretizer::fit(&v, bins).apply(&v)
        })
        .collect();
    let mut by_mi: Vec<(usize, f64)> = discrete
        .iter()
        .enumerate()
        .map(|(j, d)| (j, mutual_information(d, &y)))
        .collect();
    by_mi.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    by_mi.truncate(cfg.prefilter_p);
    let mut kept: Vec<usize> = by_mi.into_iter().map(|p| p.0).collect();
    kept.sort_unstable();

    let x: Vec<Vec<u32>> = kept.iter().map(|&j| discrete[j].clone()).collect();
    let global: Vec<usize> = kept.iter().map(|&j| live[j]).collect();
    let w: Vec<f64> = global.iter().map(|&f| weights[f]).collect();
    let m = (2 * cfg.k).min(x.len());
    let mrmr = mrmr_rank(&x, &y, m, Some(&w));
    let mrms = mrms_rank(&x, &y, m, Some(&w));
    let mut union: Vec<usize> = Vec::new();
    for &j in mrmr.order.iter().chain(&mrms.order) {
        if !union.contains(&global[j]) {
            union.push(global[j]);
        }
    }

    let target = cfg.k.min(union.len());
    let mut chosen: Vec<usize> = Vec::new();
    let mut prefix_scores: Vec<f64> = Vec::new();
    while chosen.len() < target {
        let trial: Vec<usize> = union.iter().copied().filter(|f| !chosen.contains(f)).collect();
        let scores = trial
            .par_iter()
            .map(|&f| {
                let mut s = chosen.clone();
                s.push(f);
                wrapper_score(&s, fold, settings, memo)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for i in 1..trial.len() {
            if scores[i] > scores[best] || (scores[i] == scores[best] && trial[i] < trial[best]) {
                best = i;
            }
        }
        chosen.push(trial[best]);
        prefix_scores.push(scores[best]);
    }
    let mut wrapper_best_size = 0;
    for (i, &s) in prefix_scores.iter().enumerate() {
        if wrapper_best_size == 0 || s > prefix_scores[wrapper_best_size - 1] {
            wrapper_best_size = i + 1;
        }
    }
    let ranked = |r: &super::filter::Ranking| {
        r.order
            .iter()
            .zip(&r.scores)
            .map(|(&j, &score)| RankedKey { key: key(global[j]), score })
            .collect()
    };
    Ok(Ranked {
        stages: FoldStages {
            fold: fold.fold,
            candidates: candidates.len(),
            constant_on_train: candidates.len() - live.len(),
            prefiltered: kept.len(),
            mrmr: ranked(&mrmr),
            mrms: ranked(&mrms),
            union: union.iter().map(|&f| key(f)).collect(),
            wrapper: chosen
                .iter()
                .zip(&prefix_scores)
                .map(|(&f, &score)| RankedKey { key: key(f), score })
                .collect(),
            wrapper_best_size,
        },
        order: chosen,
    })
}

/// Borda count over the per-fold orders; ties go to the lower id.
fn consensus(orders: &[Vec<usize>], k: usize) -> Vec<usize> {
    let mut points: BTreeMap<usize, usize> = BTreeMap::new();
    for order in orders {
        for (r, &f) in order.iter().enumerate() {
            *points.entry(f).or_default() += order.len() - r;
        }
    }
    let mut all: Vec<(usize, usize)> = points.into_iter().collect();
    all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    all.into_iter().take(k).map(|p| p.0).collect()
}

/// Selection output of one level.
#[derive(Debug, Clone)]
pub struct LevelSelection {
    pub report: LevelReport,
    /// Every subset scored, members as ascending feature ids.
    pub subsets: Vec<SubsetScore>,
    /// Tuned specs per fold, in [`ClassifierKind::ALL`] order.
    pub specs: Vec<Vec<ClassifierSpec>>,
    pub wrapper_fits: usize,
}

struct LevelRun {
    selection: LevelSelection,
    pool: LevelPool,
}

fn fold_views<'a>(plan: &FoldPlan, columns: &'a [Vec<f64>], labels: &'a [u8]) -> Vec<FoldData<'a>> {
    (0..plan.n_folds)
        .map(|f| FoldData {
            fold: f,
            columns,
            labels,
            train: plan.indices(f, Role::Train),
            eval: plan.indices(f, Role::Eval),
        })
        .collect()
}

/// Ranks each fold's `candidates` (prefilter, mRMR and MRMS, union, wrapper
/// forward selection to k), merges the fold orders into one consensus list
/// and scores its non-empty subsets on every fold with classifiers tuned
/// once on the full list. `keys` and `weights` are indexed by feature id.
pub fn select_for_level(
    level: u8,
    keys: &[String],
    weights: &[f64],
    folds: &[FoldData],
    candidates: &[Vec<usize>],
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<LevelSelection> {
    let memo = WrapperMemo::new();
    let ranked = folds
        .par_iter()
        .map(|fd| {
            let settings = WrapperSettings {
                grid: cfg.grid.clone(),
                budget: cfg.wrapper_budget.clone(),
                metric: cfg.metric,
                seed: derive_seed(seed, u64::from(level), fd.fold as u64),
            };
            rank_fold(fd, &candidates[fd.fold], weights, keys, cfg, &settings, &memo)
        })
        .collect::<Result<Vec<_>>>()?;

    let orders: Vec<Vec<usize>> = ranked.iter().map(|r| r.order.clone()).collect();
    let chosen = consensus(&orders, cfg.k);
    if chosen.is_empty() {
        return Err(Error::Data(format!("level {level}: no feature varies on Train")));
    }
    let specs = folds
        .par_iter()
        .map(|fd| {
            let (xt, yt) = fd.rows(&fd.train, &chosen);
            let (xe, ye) = fd.rows(&fd.eval, &chosen);
            let seed = derive_seed(seed, u64::from(level), fd.fold as u64);
            ClassifierKind::ALL
                .iter()
                .map(|&kind| {
                    tune(kind, &xt, &yt, &xe, &ye, &cfg.grid, &cfg.tuning_budget, cfg.metric, seed).map(|t| t.spec)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let outcome = search_subsets(chosen.len(), cfg.c, |members| {
        let set: Vec<usize> = members.iter().map(|&m| chosen[m]).collect();
        folds
            .iter()
            .map(|fd| {
                let reports = score_with_specs(&set, fd, &specs[fd.fold], cfg.metric)?;
                Ok(reports[best_report(&reports)].value)
            })
            .collect()
    })?;
    let subsets: Vec<SubsetScore> = outcome
        .subsets
        .into_iter()
        .map(|mut s| {
            s.members = s.members.iter().map(|&m| chosen[m]).collect();
            s.members.sort_unstable();
            s
        })
        .collect();
    let best_single_fold = subsets.iter().map(SubsetScore::best).fold(f64::NEG_INFINITY, f64::max);
    let best_worst_fold = subsets.iter().map(SubsetScore::worst).fold(f64::NEG_INFINITY, f64::max);
    let met_tau = best_worst_fold >= cfg.tau;
    log::info!(
        "level {level}: {} features, {} subsets, best single fold {best_single_fold:.4}, best worst fold {best_worst_fold:.4}, tau {} {}",
        keys.len(),
        subsets.len(),
        cfg.tau,
        if met_tau { "met" } else { "not met" }
    );
    let report = LevelReport {
        level,
        n_features: keys.len(),
        wavelets: Vec::new(),
        folds: ranked.into_iter().map(|r| r.stages).collect(),
        consensus: chosen.iter().map(|&f| keys[f].clone()).collect(),
        tuned: specs.clone(),
        subsets_evaluated: subsets.len(),
        greedy_fallback: outcome.greedy_fallback,
        best_single_fold,
        best_worst_fold,
        met_tau,
    };
    Ok(LevelSelection {
        report,
        subsets,
        specs,
        wrapper_fits: memo.computed(),
    })
}

fn run_level(
    dataset: &SignalDataset,
    plan: &FoldPlan,
    level: u8,
    features: &FeatureConfig,
    cfg: &SelectionConfig,
    labels: &[u8],
    counters: &mut Instrumentation,
) -> Result<LevelRun> {
    let pools = (0..plan.n_folds)
        .into_par_iter()
        .map(|f| build_feature_pool(dataset, plan, f, level, features))
        .collect::<Result<Vec<_>>>()?;
    counters.pool_builds[level as usize - 1] += pools.len();
    counters.level_selections[level as usize - 1] += 1;
    let pool = union_pool(pools)?;
    let weights: Vec<f64> = pool
        .table
        .records
        .iter()
        .map(|r| cfg.expert_weights.weight_of(r))
        .collect();
    let unmatched = cfg.expert_weights.unmatched(&pool.table.records);
    if !unmatched.is_empty() {
        log::warn!("level {level}: {} weight selector(s) match no feature", unmatched.len());
    }
    let keys: Vec<String> = pool.table.records.iter().map(|r| r.key.clone()).collect();
    let folds = fold_views(plan, &pool.columns, labels);
    let mut selection = select_for_level(level, &keys, &weights, &folds, &pool.members, cfg, plan.seed)?;
    selection.report.wavelets = pool.wavelets.clone();
    counters.wrapper_fits += selection.wrapper_fits;
    counters.subset_evaluations += selection.subsets.len();
    Ok(LevelRun { selection, pool })
}

fn finalize(
    subset: &SubsetScore,
    run: &LevelRun,
    plan: &FoldPlan,
    labels: &[u8],
    metric: Metric,
) -> Result<Recommended> {
    let set = &subset.members;
    let folds = fold_views(plan, &run.pool.columns, labels);
    let outcomes = folds
        .par_iter()
        .map(|fd| {
            let specs = &run.selection.specs[fd.fold];
            let reports = score_with_specs(set, fd, specs, metric)?;
            let best = best_report(&reports);
            let mut fit_rows = fd.train.clone();
            fit_rows.extend(&fd.eval);
            fit_rows.sort_unstable();
            let (x, y) = fd.rows(&fit_rows, set);
            let (xt, yt) = fd.rows(&plan.indices(fd.fold, Role::Test), set);
            let model = train(&specs[best], &x, &y)?;
            Ok(FoldOutcome {
                fold: fd.fold,
                classifier: specs[best].clone(),
                eval: reports[best].clone(),
                test: evaluate(&model, &xt, &yt, metric)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Recommended {
        feature_ids: set.clone(),
        keys: set.iter().map(|&f| run.pool.table.records[f].key.clone()).collect(),
        eval_best: subset.best(),
        eval_worst: subset.worst(),
        eval_mean: subset.mean(),
        folds: outcomes,
    })
}

/// Runs levels 1, 2 and 3 in turn, stopping at the first whose best
/// worst-fold Eval metric reaches `tau`, and reports Fe1 and Fe2 from the
/// last level run.
pub fn recommend(
    dataset: &SignalDataset,
    plan: &FoldPlan,
    features: &FeatureConfig,
    cfg: &SelectionConfig,
) -> Result<Recommendation> {
    cfg.validate()?;
    if plan.instance_ids.len() != dataset.len() {
        return Err(Error::Data("fold plan does not cover the dataset".into()));
    }
    let labels = dataset.labels();
    let mut counters = Instrumentation::default();
    let mut reports = Vec::new();
    let mut last: Option<LevelRun> = None;
    for level in 1..=3u8 {
        let run = run_level(dataset, plan, level, features, cfg, &labels, &mut counters)?;
        let met = run.selection.report.met_tau;
        reports.push(run.selection.report.clone());
        last = Some(run);
        if met {
            break;
        }
        if level < 3 {
            log::info!("level {level} below tau {}: escalating to level {}", cfg.tau, level + 1);
        }
    }
    let run = last.expect("at least one level runs");
    let fe1 = choose_fe1(&run.selection.subsets).ok_or_else(|| Error::Invariant("no subsets scored".into()))?;
    let fe2 = choose_fe2(&run.selection.subsets).ok_or_else(|| Error::Invariant("no subsets scored".into()))?;
    if fe1.best() < fe2.best() || fe2.worst() < fe1.worst() {
        return Err(Error::Invariant("Fe1/Fe2 ordering violated".into()));
    }
    let result = RecommendationResult {
        schema_version: SCHEMA_VERSION,
        seed: plan.seed,
        n_folds: plan.n_folds,
        level_reached: run.selection.report.level,
        levels: reports,
        fe1: finalize(fe1, &run, plan, &labels, cfg.metric)?,
        fe2: finalize(fe2, &run, plan, &labels, cfg.metric)?,
        instrumentation: counters,
        selection: cfg.clone(),
        features: features.clone(),
    };
    Ok(Recommendation {
        result,
        table: run.pool.table,
        columns: run.pool.columns,
    })
}

/// Feature ids of Fe1 and Fe2 together, ascending.
pub fn recommended_ids(result: &RecommendationResult) -> Vec<usize> {
    let all: BTreeSet<usize> = result
        .fe1
        .feature_ids
        .iter()
        .chain(&result.fe2.feature_ids)
        .copied()
        .collect();
    all.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two uniform features whose sign product is the label, plus noise.
    fn xor_columns(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = a.iter().zip(&b).map(|(u, v)| u8::from((*u > 0.0) != (*v > 0.0))).collect();
        (vec![a, b, noise], y)
    }

    fn two_folds<'a>(cols: &'a [Vec<f64>], y: &'a [u8]) -> Vec<FoldData<'a>> {
        let n = y.len();
        (0..2)
            .map(|f| FoldData {
                fold: f,
                columns: cols,
                labels: y,
                train: (0..n).filter(|i| (i / 2) % 2 == f).collect(),
                eval: (0..n).filter(|i| (i / 2) % 2 != f).collect(),
            })
            .collect()
    }

    fn keys(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i:02}")).collect()
    }

    #[test]
    fn xor_pair_wins_the_subset_search() {
        let (cols, y) = xor_columns(240, 3);
        let folds = two_folds(&cols, &y);
        let cfg = SelectionConfig {
            k: 3,
            ..SelectionConfig::default()
        };
        let sel = select_for_level(1, &keys(3), &[1.0; 3], &folds, &[vec![0, 1, 2], vec![0, 1, 2]], &cfg, 1).unwrap();
        assert_eq!(sel.subsets.len(), 7);
        let fe1 = choose_fe1(&sel.subsets).unwrap();
        assert_eq!(fe1.members, vec![0, 1]);
        let pair = sel.subsets.iter().find(|s| s.members == [0, 1]).unwrap();
        for single in sel.subsets.iter().filter(|s| s.members.len() == 1) {
            assert!(single.worst() < pair.worst() && single.best() < pair.best());
        }
        assert!(pair.worst() > 0.9);
    }

    #[test]
    fn wrapper_prefix_never_drops_below_best_singleton() {
        let (cols, y) = xor_columns(160, 8);
        let folds = two_folds(&cols, &y);
        let cfg = SelectionConfig {
            k: 3,
            ..SelectionConfig::default()
        };
        let sel = select_for_level(1, &keys(3), &[1.0; 3], &folds, &[vec![0, 1, 2], vec![0, 1, 2]], &cfg, 2).unwrap();
        for stages in &sel.report.folds {
            let first = stages.wrapper[0].score;
            let best = stages.wrapper[stages.wrapper_best_size - 1].score;
            assert!(best >= first);
            assert!(stages.wrapper.iter().all(|r| r.score <= best));
        }
    }

    #[test]
    fn unit_weights_reproduce_rankings_and_selection_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 120;
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let cols: Vec<Vec<f64>> = (0..8)
            .map(|f| {
                y.iter()
                    .map(|&l| f64::from(l) * (f as f64) * 0.15 + rng.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let folds = two_folds(&cols, &y);
        let members = vec![(0..8).collect::<Vec<_>>(); 2];
        let cfg = SelectionConfig {
            k: 3,
            ..SelectionConfig::default()
        };
        let plain = select_for_level(1, &keys(8), &[1.0; 8], &folds, &members, &cfg, 4).unwrap();
        let again = select_for_level(1, &keys(8), &[1.0; 8], &folds, &members, &cfg, 4).unwrap();
        assert_eq!(plain.report, again.report);
        assert_eq!(plain.subsets, again.subsets);
        assert_eq!(plain.report.folds[0].mrmr[0].key, "f07");
        let mut w = vec![1.0; 8];
        w[3] = 10.0;
        let weighted = select_for_level(1, &keys(8), &w, &folds, &members, &cfg, 4).unwrap();
        assert_eq!(weighted.report.folds[0].mrmr[0].key, "f03");
    }

    #[test]
    fn config_bounds() {
        assert!(SelectionConfig::default().validate().is_ok());
        for bad in [
            SelectionConfig { k: 1, ..Default::default() },
            SelectionConfig { k: 21, ..Default::default() },
            SelectionConfig { tau: 0.0, ..Default::default() },
            SelectionConfig { c: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        let parsed: SelectionConfig = serde_json::from_str(r#"{"k": 4, "bins": "AUTO"}"#).unwrap();
        assert_eq!(parsed.k, 4);
        assert_eq!(parsed.c, 1 << 20);
        let fixed: SelectionConfig = serde_json::from_str(r#"{"bins": 8}"#).unwrap();
        assert_eq!(fixed.bins, BinCount::Fixed(8));
        assert!(serde_json::from_str::<SelectionConfig>(r#"{"kk": 4}"#).is_err());
    }

    #[test]
    fn borda_consensus_orders_by_points_then_id() {
        assert_eq!(consensus(&[vec![3, 1, 2], vec![1, 3, 2]], 2), vec![1, 3]);
        assert_eq!(consensus(&[vec![5], vec![4]], 3), vec![4, 5]);
    }
}
