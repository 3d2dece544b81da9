//! The four subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use featrec::dataset::{load_dataset, synthesize_dataset, write_dataset, SignalDataset, SynthesisSpec};
use featrec::features::MappingTable;
use featrec::interpret::{
    apply_expert_weights, build_report, read_fundamentals, train_values, ExpertWeights, HarmonicSettings,
};
use featrec::models::{evaluate, pca_baseline, train_with, MetricReport, Pca, PcaRow};
use featrec::partition::{plan_folds, FoldPlan, FoldsFile, Role};
use featrec::selection::{recommend, recommended_ids, FoldOutcome, RecommendationResult};
use featrec::{Error, ErrorKind};
use serde::{Deserialize, Serialize};

use crate::config::{read_json, write_json, Overrides, RunConfig, SCHEMA_VERSION};
use crate::logging;

pub const FOLDS_FILE: &str = "folds.json";
pub const TABLE_FILE: &str = "mapping_table.json";
pub const RECOMMENDATION_FILE: &str = "recommendation.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const RUN_CONFIG_FILE: &str = "run.config.json";
pub const RERUN_CONFIG_FILE: &str = "rerun.config.json";
pub const PCA_DIR: &str = "baseline-pca";

/// A library error tagged with the stage it came from.
#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self.source.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Internal => 4,
        }
    }
}

pub type CmdResult<T> = std::result::Result<T, StageError>;

trait Stage<T> {
    fn stage(self, stage: &'static str) -> CmdResult<T>;
}

impl<T> Stage<T> for featrec::Result<T> {
    fn stage(self, stage: &'static str) -> CmdResult<T> {
        self.map_err(|source| StageError { stage, source })
    }
}

fn create_dir(dir: &Path) -> featrec::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Data(format!("{}: {e}", dir.display())))
}

struct Timer {
    stage: &'static str,
    start: Instant,
}

impl Timer {
    fn start(stage: &'static str) -> Self {
        Timer {
            stage,
            start: Instant::now(),
        }
    }

    fn done(self) {
        log::info!("stage {} took {:.3} s", self.stage, self.start.elapsed().as_secs_f64());
    }
}

pub fn synth(spec_path: &Path, seed: u64, out: &Path) -> CmdResult<()> {
    let spec: SynthesisSpec = read_json(spec_path)
        .map_err(|e| Error::Config(e.to_string()))
        .stage("synth")?;
    let ds = synthesize_dataset(&spec, seed).stage("synth")?;
    write_dataset(&ds, out).stage("synth")?;
    log::info!("wrote {} instances to {}", ds.len(), out.display());
    Ok(())
}

fn load_config(path: &Path, overrides: &Overrides) -> CmdResult<RunConfig> {
    let mut cfg = RunConfig::read(path).stage("config")?;
    cfg.apply(overrides);
    cfg.validate().stage("config")?;
    Ok(cfg)
}

fn load(cfg: &RunConfig) -> CmdResult<SignalDataset> {
    let t = Timer::start("load");
    let loaded = load_dataset(&cfg.dataset, cfg.format).stage("load")?;
    for d in &loaded.dropped {
        log::warn!("dropped row {}: {}", d.row, d.reason);
    }
    log::info!(
        "dataset '{}': {} instances, {} Hz",
        loaded.dataset.name,
        loaded.dataset.len(),
        loaded.dataset.sampling_rate_hz
    );
    t.done();
    Ok(loaded.dataset)
}

fn folds(cfg: &RunConfig, ds: &SignalDataset) -> CmdResult<FoldPlan> {
    let t = Timer::start("folds");
    let (clusters, plan) = plan_folds(ds, cfg.n_folds, cfg.seed).stage("folds")?;
    log::info!(
        "{} clusters (silhouette {:.4}), {} folds",
        clusters.k_clusters,
        clusters.silhouette,
        plan.n_folds
    );
    for r in &plan.repairs {
        log::info!("fold repair: {r}");
    }
    t.done();
    Ok(plan)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetMetrics {
    pub feature_ids: Vec<usize>,
    pub keys: Vec<String>,
    pub folds: Vec<FoldOutcome>,
    pub test_min: f64,
    pub test_mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema_version: u32,
    pub seed: u64,
    pub metric: String,
    pub level_reached: u8,
    pub fe1: SetMetrics,
    pub fe2: SetMetrics,
}

fn set_metrics(r: &featrec::selection::Recommended) -> SetMetrics {
    let tests: Vec<f64> = r.folds.iter().map(|f| f.test.value).collect();
    SetMetrics {
        feature_ids: r.feature_ids.clone(),
        keys: r.keys.clone(),
        folds: r.folds.clone(),
        test_min: tests.iter().copied().fold(f64::INFINITY, f64::min),
        test_mean: tests.iter().sum::<f64>() / tests.len().max(1) as f64,
    }
}

pub fn metrics_of(result: &RecommendationResult) -> MetricsFile {
    MetricsFile {
        schema_version: SCHEMA_VERSION,
        seed: result.seed,
        metric: result.selection.metric.name().to_string(),
        level_reached: result.level_reached,
        fe1: set_metrics(&result.fe1),
        fe2: set_metrics(&result.fe2),
    }
}

pub fn recommend_cmd(config: &Path, overrides: &Overrides) -> CmdResult<PathBuf> {
    let mut cfg = load_config(config, overrides)?;
    create_dir(&cfg.out).stage("output")?;
    cfg.out = fs::canonicalize(&cfg.out).unwrap_or(cfg.out);
    logging::attach_file(&cfg.out.join("recommend.log"))
        .map_err(|e| Error::Data(format!("log file: {e}")))
        .stage("output")?;
    log::info!("run directory {}", cfg.out.display());
    let ds = load(&cfg)?;
    let plan = folds(&cfg, &ds)?;
    write_json(&cfg.out.join(FOLDS_FILE), &plan.to_file()).stage("output")?;

    let (mut features, mut selection) = (cfg.features.clone(), cfg.selection.clone());
    if let Some(p) = &cfg.weights {
        let w = ExpertWeights::read(p).stage("weights")?;
        let weighted = apply_expert_weights(&w, &selection, &features, None).stage("weights")?;
        features = weighted.features;
        selection = weighted.selection;
        log::info!("applied {} expert weight entries", w.entries.len());
    }

    let t = Timer::start("recommend");
    let rec = recommend(&ds, &plan, &features, &selection).stage("recommend")?;
    t.done();
    let r = &rec.result;
    for l in &r.levels {
        log::info!(
            "level {}: {} features, best single fold {:.4}, best worst fold {:.4}, tau {} {}",
            l.level,
            l.n_features,
            l.best_single_fold,
            l.best_worst_fold,
            selection.tau,
            if l.met_tau { "met" } else { "not met" }
        );
    }
    log::info!("level reached {}", r.level_reached);
    log::info!("Fe1 {:?} (best fold {:.4})", r.fe1.keys, r.fe1.eval_best);
    log::info!("Fe2 {:?} (worst fold {:.4})", r.fe2.keys, r.fe2.eval_worst);

    let t = Timer::start("write");
    rec.table.write(&cfg.out.join(TABLE_FILE)).stage("output")?;
    write_json(&cfg.out.join(RECOMMENDATION_FILE), r).stage("output")?;
    write_json(&cfg.out.join(METRICS_FILE), &metrics_of(r)).stage("output")?;
    cfg.write(&cfg.out.join(RUN_CONFIG_FILE)).stage("output")?;
    t.done();
    Ok(cfg.out)
}

pub struct InterpretArgs {
    pub run_dir: PathBuf,
    pub fundamentals: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub harmonics: HarmonicSettings,
    pub range_fold: usize,
}

fn require_file(p: &Path) -> featrec::Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::Data(format!("run directory is missing {}", p.display())))
    }
}

pub fn interpret_cmd(args: &InterpretArgs) -> CmdResult<()> {
    let dir = &args.run_dir;
    for f in [RUN_CONFIG_FILE, FOLDS_FILE, TABLE_FILE, RECOMMENDATION_FILE] {
        require_file(&dir.join(f)).stage("interpret")?;
    }
    let cfg: RunConfig = read_json(&dir.join(RUN_CONFIG_FILE)).stage("interpret")?;
    let table = MappingTable::read(&dir.join(TABLE_FILE)).stage("interpret")?;
    let result: RecommendationResult = read_json(&dir.join(RECOMMENDATION_FILE)).stage("interpret")?;
    let folds_file: FoldsFile = read_json(&dir.join(FOLDS_FILE)).stage("interpret")?;
    if args.range_fold >= folds_file.n_folds {
        return Err(StageError {
            stage: "interpret",
            source: Error::Config(format!("fold {} out of range", args.range_fold)),
        });
    }
    let ds = load(&cfg)?;
    let plan = FoldPlan::from_file(&folds_file, &ds).stage("interpret")?;

    let fundamentals_path = args.fundamentals.clone().or(cfg.fundamentals.clone());
    let fundamentals = fundamentals_path
        .as_deref()
        .map(read_fundamentals)
        .transpose()
        .stage("fundamentals")?;

    let t = Timer::start("interpret");
    let ids = recommended_ids(&result);
    let (values, labels) = train_values(&ds, &plan, args.range_fold, &table, &ids).stage("interpret")?;
    let report = build_report(
        &result,
        &table,
        &values,
        &labels,
        args.range_fold,
        fundamentals.as_deref(),
        args.harmonics,
    )
    .stage("interpret")?;
    write_json(&dir.join("interpretation.json"), &report).stage("output")?;
    fs::write(dir.join("interpretation.md"), report.to_markdown())
        .map_err(|e| Error::Data(format!("interpretation.md: {e}")))
        .stage("output")?;
    t.done();

    if let Some(p) = &args.weights {
        let w = ExpertWeights::read(p).stage("weights")?;
        let weighted =
            apply_expert_weights(&w, &result.selection, &result.features, Some(&table.records)).stage("weights")?;
        let rerun = RunConfig {
            features: weighted.features,
            selection: weighted.selection,
            weights: None,
            out: dir.join("rerun"),
            ..cfg
        };
        write_json(&dir.join(RERUN_CONFIG_FILE), &rerun).stage("output")?;
        log::info!("wrote {}", dir.join(RERUN_CONFIG_FILE).display());
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaFold {
    pub fold: usize,
    pub rows: Vec<PcaRow>,
    pub best: usize,
    /// Best row retrained on Train and Eval, scored on Test.
    pub test: MetricReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaMetricsFile {
    pub schema_version: u32,
    pub seed: u64,
    pub metric: String,
    pub n_folds: usize,
    pub components: Vec<usize>,
    pub folds: Vec<PcaFold>,
    pub test_min: f64,
    pub test_mean: f64,
}

fn raw_rows(ds: &SignalDataset, rows: &[usize], len: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    (
        rows.iter().map(|&r| ds.instances[r].samples[..len].to_vec()).collect(),
        rows.iter().map(|&r| ds.instances[r].label).collect(),
    )
}

pub fn baseline_pca_cmd(config: &Path, overrides: &Overrides, components: Option<Vec<usize>>) -> CmdResult<PathBuf> {
    let mut cfg = load_config(config, overrides)?;
    if let Some(c) = components {
        cfg.pca_components = c;
        cfg.validate().stage("config")?;
    }
    let out = cfg.out.join(PCA_DIR);
    create_dir(&out).stage("output")?;
    let out = fs::canonicalize(&out).unwrap_or(out);
    logging::attach_file(&out.join("baseline-pca.log"))
        .map_err(|e| Error::Data(format!("log file: {e}")))
        .stage("output")?;
    let ds = load(&cfg)?;
    let plan = folds(&cfg, &ds)?;
    write_json(&out.join(FOLDS_FILE), &plan.to_file()).stage("output")?;
    let len = ds.min_len();
    let metric = cfg.selection.metric;
    let t = Timer::start("baseline-pca");
    let mut folds = Vec::new();
    for fold in 0..plan.n_folds {
        let (xt, yt) = raw_rows(&ds, &plan.indices(fold, Role::Train), len);
        let (xe, ye) = raw_rows(&ds, &plan.indices(fold, Role::Eval), len);
        let (xs, ys) = raw_rows(&ds, &plan.indices(fold, Role::Test), len);
        let base = pca_baseline(
            &xt,
            &yt,
            &xe,
            &ye,
            &cfg.pca_components,
            metric,
            &cfg.selection.grid,
            &cfg.selection.tuning_budget,
        )
        .stage("baseline-pca")?;
        let best = base.best_row().clone();
        let mut xte = xt.clone();
        xte.extend(xe);
        let mut yte = yt.clone();
        yte.extend(ye);
        let pca = Pca::fit(&xte, best.n_components_used).stage("baseline-pca")?;
        let model = train_with(&best.spec, &pca.project(&xte), &yte, false).stage("baseline-pca")?;
        let test = evaluate(&model, &pca.project(&xs), &ys, metric).stage("baseline-pca")?;
        log::info!(
            "fold {fold}: best {} components {:?}, eval {:.4}, test {:.4}",
            best.n_components_used,
            best.kind,
            best.eval.value,
            test.value
        );
        folds.push(PcaFold {
            fold,
            rows: base.rows,
            best: base.best,
            test,
        });
    }
    t.done();
    let tests: Vec<f64> = folds.iter().map(|f| f.test.value).collect();
    let file = PcaMetricsFile {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        metric: metric.name().to_string(),
        n_folds: plan.n_folds,
        components: cfg.pca_components.clone(),
        test_min: tests.iter().copied().fold(f64::INFINITY, f64::min),
        test_mean: tests.iter().sum::<f64>() / tests.len().max(1) as f64,
        folds,
    };
    write_json(&out.join(METRICS_FILE), &file).stage("output")?;
    Ok(out)
}
