use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{SignalDataset, SignalInstance};
use crate::error::{Error, Result};
use crate::partition::{FoldPlan, Role};
use crate::selection::mi::{discretize, mutual_information, BinCount};
use crate::transforms::{pseudo_frequency, select_mother_wavelet, MotherWaveletChoice};

use super::context::{FeatureConfig, ResolvedContext};
use super::defs::*;
use super::extract::{def_bases, def_value, instance_base_values, Cell, CellFlags};

/// Per-instance feature values, one column per feature id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// `columns[feature_id][instance]`, instances in dataset order.
    pub columns: Vec<Vec<f64>>,
    pub feature_ids: Vec<usize>,
    pub level_of: Vec<u8>,
}

impl FeatureMatrix {
    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_instances(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// Rows `rows` restricted to the columns `features`.
    pub fn rows(&self, rows: &[usize], features: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&r| features.iter().map(|&f| self.columns[f][r]).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticInfo {
    pub description: String,
    /// Closed lower/upper bound of the value; `null` when unbounded.
    pub expected_range: (Option<f64>, Option<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingTable {
    pub schema_version: u32,
    pub context: ResolvedContext,
    pub records: Vec<ProvenanceRecord>,
    /// Description and expected range of every statistic in `records`.
    pub registry: BTreeMap<String, StatisticInfo>,
}

impl MappingTable {
    pub fn record(&self, feature_id: usize) -> Result<&ProvenanceRecord> {
        self.records
            .get(feature_id)
            .filter(|r| r.feature_id == feature_id)
            .ok_or(Error::UnknownFeature(feature_id))
    }

    pub fn id_of(&self, key: &str) -> Option<usize> {
        self.records
            .binary_search_by(|r| r.key.as_str().cmp(key))
            .ok()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// The feature pool of one fold at one level.
#[derive(Debug, Clone)]
pub struct FeaturePool {
    pub fold: usize,
    pub level: u8,
    pub wavelet: MotherWaveletChoice,
    pub matrix: FeatureMatrix,
    pub table: MappingTable,
}

impl FeaturePool {
    pub fn defs(&self) -> impl Iterator<Item = &FeatureDef> {
        self.table.records.iter().map(|r| &r.definition)
    }
}

fn level1_bases(ctx: &ResolvedContext, wavelets: &[String]) -> Vec<Base> {
    let mut out: Vec<Base> = TdStat::ALL.iter().map(|&stat| Base::Td { stat }).collect();
    for (&scale, plan) in &ctx.scales {
        out.extend(
            (0..=plan.n_fft / 2)
                .step_by(ctx.bin_stride)
                .map(|bin| Base::Bin { bin, scale }),
        );
    }
    for w in wavelets {
        for level in 1..=ctx.dwt_levels {
            for stat in [SubBandStat::Energy, SubBandStat::Std] {
                out.push(Base::SubBand {
                    band: Band {
                        wavelet: w.clone(),
                        level,
                    },
                    stat,
                });
            }
        }
    }
    out
}

fn level2_bases(ctx: &ResolvedContext, wavelets: &[String]) -> Vec<Base> {
    let mut out = Vec::new();
    for carrier in [Carrier::Raw, Carrier::Stft] {
        for stat in CarrierStat::ALL {
            out.push(Base::Carrier {
                carrier: carrier.clone(),
                stat,
            });
        }
    }
    for w in wavelets {
        for level in 1..=ctx.dwt_levels {
            // sub-band energy is already a level-1 feature
            for stat in CarrierStat::ALL.into_iter().filter(|s| *s != CarrierStat::Energy) {
                out.push(Base::Carrier {
                    carrier: Carrier::SubBand(Band {
                        wavelet: w.clone(),
                        level,
                    }),
                    stat,
                });
            }
        }
    }
    out.extend(SpectralStat::ALL.iter().map(|&stat| Base::Spectral { stat }));
    out.extend(PeakStat::ALL.iter().map(|&stat| Base::Peak { stat }));
    out
}

fn aggregations(cfg: &FeatureConfig, ctx: &ResolvedContext, base: &Base) -> Vec<Aggregation> {
    if cfg.keep_per_window && base.scale() == WindowScale::Unit {
        return (0..ctx.n_windows()).map(Aggregation::Window).collect();
    }
    if cfg.multi_agg {
        vec![
            Aggregation::Mean,
            Aggregation::Min,
            Aggregation::Max,
            Aggregation::Std,
        ]
    } else {
        vec![Aggregation::Mean]
    }
}

/// Picks the fold's mother wavelet from its Train windows.
pub fn fold_wavelet(
    dataset: &SignalDataset,
    plan: &FoldPlan,
    fold: usize,
    cfg: &FeatureConfig,
    ctx: &ResolvedContext,
) -> Result<MotherWaveletChoice> {
    let unit = ctx.unit();
    let mut per_class: BTreeMap<u8, Vec<&[f64]>> = BTreeMap::new();
    for i in plan.indices(fold, Role::Train) {
        let inst = &dataset.instances[i];
        let segs = per_class.entry(inst.label).or_default();
        for w in 0..unit.n_windows {
            let start = w * unit.hop;
            segs.push(&inst.samples[start..start + unit.window_len]);
        }
    }
    let library: Vec<&str> = cfg.wavelet_library.iter().map(String::as_str).collect();
    select_mother_wavelet(&per_class, &library)
}

type BaseValues = Vec<Vec<Vec<Cell>>>;

fn compute_base_values(dataset: &SignalDataset, bases: &[Base], ctx: &ResolvedContext) -> Result<BaseValues> {
    let refs: Vec<&Base> = bases.iter().collect();
    dataset
        .instances
        .par_iter()
        .map(|inst| instance_base_values(&inst.samples, &refs, ctx))
        .collect()
}

/// Top `r` level-2 bases by mutual information (mean over windows) with the
/// label on Train; ties keep canonical key order.
fn top_level2(
    l2: &[usize],
    bases: &[Base],
    values: &BaseValues,
    labels: &[u8],
    train: &[usize],
    r: usize,
) -> Vec<usize> {
    let bins = BinCount::Auto.resolve(train.len());
    let y: Vec<u32> = train.iter().map(|&i| labels[i] as u32).collect();
    let mut scored: Vec<(usize, f64)> = l2
        .iter()
        .map(|&b| {
            let col: Vec<f64> = values
                .iter()
                .map(|inst| crate::stats::mean(&inst[b].iter().map(|c| c.0).collect::<Vec<_>>()))
                .collect();
            let d = discretize(&col, train, bins);
            let x: Vec<u32> = train.iter().map(|&i| d[i]).collect();
            (b, mutual_information(&x, &y))
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| bases[a.0].key().cmp(&bases[b.0].key()))
    });
    scored.truncate(r);
    scored.into_iter().map(|(b, _)| b).collect()
}

/// Builds the cumulative pool for `level` (1, 2 or 3) on one fold. The
/// mother wavelet and the level-3 ratio shortlist are chosen on the fold's
/// Train rows only; the matrix covers every instance.
pub fn build_feature_pool(
    dataset: &SignalDataset,
    plan: &FoldPlan,
    fold: usize,
    level: u8,
    cfg: &FeatureConfig,
) -> Result<FeaturePool> {
    if !(1..=3).contains(&level) {
        return Err(Error::Config(format!("feature level must be 1, 2 or 3, got {level}")));
    }
    let ctx = ResolvedContext::resolve(cfg, dataset)?;
    let wavelet = fold_wavelet(dataset, plan, fold, cfg, &ctx)?;
    let wavelets = if cfg.wavelet_sweep {
        cfg.wavelet_library.clone()
    } else {
        vec![wavelet.wavelet_name.clone()]
    };
    let mut bases = level1_bases(&ctx, &wavelets);
    if level >= 2 {
        bases.extend(level2_bases(&ctx, &wavelets));
    }
    let values = compute_base_values(dataset, &bases, &ctx)?;

    let mut defs: Vec<FeatureDef> = Vec::new();
    for b in &bases {
        for aggregation in aggregations(cfg, &ctx, b) {
            defs.push(FeatureDef::Base {
                base: b.clone(),
                aggregation,
            });
        }
    }
    if level == 3 {
        if ctx.n_windows() >= 2 {
            for b in bases.iter().filter(|b| !matches!(b, Base::Bin { .. })) {
                defs.push(FeatureDef::Derivative { base: b.clone() });
            }
        } else {
            log::info!("single window per instance: no derivative features");
        }
        let l2: Vec<usize> = (0..bases.len()).filter(|&b| bases[b].level() == 2).collect();
        let train = plan.indices(fold, Role::Train);
        let top = top_level2(&l2, &bases, &values, &dataset.labels(), &train, cfg.ratio_top_r);
        for &a in &top {
            for &b in &top {
                if a == b {
                    continue;
                }
                let aggs = if cfg.keep_per_window {
                    (0..ctx.n_windows()).map(Aggregation::Window).collect()
                } else {
                    aggregations(cfg, &ctx, &bases[a])
                };
                for aggregation in aggs {
                    defs.push(FeatureDef::Ratio {
                        numerator: bases[a].clone(),
                        denominator: bases[b].clone(),
                        aggregation,
                    });
                }
            }
        }
    }

    let index: HashMap<&Base, usize> = bases.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let mut keyed: Vec<(String, FeatureDef)> = defs.into_iter().map(|d| (d.key(), d)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);

    let computed: Vec<(Vec<f64>, Vec<String>)> = keyed
        .par_iter()
        .map(|(_, def)| {
            let mut col = Vec::with_capacity(values.len());
            let mut tally = FlagTally::default();
            for inst in &values {
                let (v, f) = def_value(def, |b| &inst[index[b]]);
                tally.add(f);
                col.push(v);
            }
            (col, tally.render(values.len()))
        })
        .collect();

    let defs: Vec<FeatureDef> = keyed.into_iter().map(|(_, d)| d).collect();
    let flags: Vec<Vec<String>> = computed.iter().map(|c| c.1.clone()).collect();
    let table = mapping_table(&defs, &flags, &ctx)?;
    let matrix = FeatureMatrix {
        feature_ids: (0..defs.len()).collect(),
        level_of: defs.iter().map(FeatureDef::level).collect(),
        columns: computed.into_iter().map(|c| c.0).collect(),
    };
    log::info!(
        "fold {fold} level {level}: {} features (wavelet {})",
        matrix.n_features(),
        wavelet.wavelet_name
    );
    Ok(FeaturePool {
        fold,
        level,
        wavelet,
        matrix,
        table,
    })
}

#[derive(Default)]
struct FlagTally {
    degenerate: usize,
    ratio_guard: usize,
    non_finite: usize,
}

impl FlagTally {
    fn add(&mut self, f: CellFlags) {
        self.degenerate += usize::from(f.degenerate);
        self.ratio_guard += usize::from(f.ratio_guard);
        self.non_finite += usize::from(f.non_finite);
    }

    fn render(&self, n: usize) -> Vec<String> {
        let mut out = Vec::new();
        for (name, count) in [
            ("degenerate_fallback", self.degenerate),
            ("ratio_denominator_guard", self.ratio_guard),
            ("non_finite_replaced", self.non_finite),
        ] {
            if count > 0 {
                out.push(format!("{name}: {count}/{n} instances"));
            }
        }
        out
    }
}

fn location_of(base: &Base, ctx: &ResolvedContext) -> Result<Location> {
    let none = Location {
        kind: LocationKind::None,
        bin_index: None,
        dwt_level: None,
        frequency_hz: None,
    };
    Ok(match base {
        Base::Bin { bin, scale } => Location {
            kind: LocationKind::Bin,
            bin_index: Some(*bin),
            frequency_hz: Some(*bin as f64 * ctx.rate / ctx.plan(*scale)?.n_fft as f64),
            ..none
        },
        Base::Spectral { .. } | Base::Carrier { carrier: Carrier::Stft, .. } => Location {
            kind: LocationKind::Spectrum,
            frequency_hz: Some(ctx.rate / 2.0),
            ..none
        },
        _ => match base.band() {
            Some(band) => Location {
                kind: LocationKind::DwtLevel,
                dwt_level: Some(band.level),
                frequency_hz: Some(pseudo_frequency(&band.wavelet, band.level, ctx.rate)?),
                ..none
            },
            None => none,
        },
    })
}

fn params_of(base: &Base, ctx: &ResolvedContext) -> Result<TransformParams> {
    let plan = ctx.plan(base.scale())?;
    let band = base.band();
    Ok(TransformParams {
        window_size_s: plan.window_size_s,
        overlap: ctx.overlap,
        n_fft: (base.domain() == Domain::Frequency).then_some(plan.n_fft),
        wavelet_name: band.map(|b| b.wavelet.clone()),
        dwt_level: band.map(|b| b.level),
    })
}

/// Provenance records for `defs` (already in canonical key order).
pub fn mapping_table(defs: &[FeatureDef], flags: &[Vec<String>], ctx: &ResolvedContext) -> Result<MappingTable> {
    let ids: HashMap<String, usize> = defs.iter().enumerate().map(|(i, d)| (d.key(), i)).collect();
    let mut registry = BTreeMap::new();
    let mut records = Vec::with_capacity(defs.len());
    for (id, def) in defs.iter().enumerate() {
        let anchor = def.anchor();
        let parents: Vec<usize> = match def {
            FeatureDef::Base { .. } => Vec::new(),
            FeatureDef::Ratio {
                numerator,
                denominator,
                aggregation,
            } => [numerator, denominator]
                .iter()
                .filter_map(|b| {
                    let parent = FeatureDef::Base {
                        base: (*b).clone(),
                        aggregation: *aggregation,
                    };
                    ids.get(&parent.key()).copied()
                })
                .collect(),
            FeatureDef::Derivative { base } => defs
                .iter()
                .enumerate()
                .filter(|(_, d)| matches!(d, FeatureDef::Base { base: b, .. } if b == base))
                .map(|(i, _)| i)
                .collect(),
        };
        let statistic = def.statistic();
        registry
            .entry(statistic.clone())
            .or_insert_with(|| statistic_info(def));
        records.push(ProvenanceRecord {
            feature_id: id,
            key: def.key(),
            level: def.level(),
            domain: anchor.domain(),
            transform: anchor.transform(),
            transform_params: params_of(anchor, ctx)?,
            location: location_of(anchor, ctx)?,
            statistic,
            window_index: match def.aggregation() {
                Some(Aggregation::Window(w)) => WindowIndex::Index(w),
                _ => WindowIndex::All,
            },
            aggregation: def
                .aggregation()
                .map_or("mean_abs_diff", Aggregation::name)
                .to_string(),
            parent_feature_ids: parents,
            flags: flags.get(id).cloned().unwrap_or_default(),
            definition: def.clone(),
        });
    }
    Ok(MappingTable {
        schema_version: 1,
        context: ctx.clone(),
        records,
        registry,
    })
}

fn statistic_info(def: &FeatureDef) -> StatisticInfo {
    let (d, lo, hi): (&str, Option<f64>, Option<f64>) = match def {
        FeatureDef::Ratio { .. } => ("Per-window ratio of two level-2 statistics", None, None),
        FeatureDef::Derivative { .. } => (
            "Mean absolute change of a statistic between consecutive windows",
            Some(0.0),
            None,
        ),
        FeatureDef::Base { base, .. } => match base {
            Base::Td { stat } => match stat {
                TdStat::Mean => ("Arithmetic mean of the raw window", None, None),
                TdStat::Std => ("Population standard deviation of the raw window", Some(0.0), None),
                TdStat::Rms => ("Root mean square of the raw window", Some(0.0), None),
                TdStat::Min => ("Minimum sample of the raw window", None, None),
                TdStat::Max => ("Maximum sample of the raw window", None, None),
                TdStat::Median => ("Median sample of the raw window", None, None),
                TdStat::ZeroCross => ("Sign changes between consecutive samples", Some(0.0), None),
            },
            Base::Bin { .. } => ("Magnitude of one DFT bin of the tapered window", Some(0.0), None),
            Base::SubBand { stat, .. } => match stat {
                SubBandStat::Energy => ("Sum of squared detail coefficients", Some(0.0), None),
                SubBandStat::Std => ("Standard deviation of detail coefficients", Some(0.0), None),
            },
            Base::Carrier { stat, .. } => match stat {
                CarrierStat::Skewness => ("Third standardized moment (0 for a flat carrier)", None, None),
                CarrierStat::Kurtosis => ("Excess kurtosis (0 for a flat carrier)", Some(-2.0), None),
                CarrierStat::Iqr => ("Interquartile range", Some(0.0), None),
                CarrierStat::Entropy => ("Shannon entropy (nats) of normalized squared values", Some(0.0), None),
                CarrierStat::Energy => ("Sum of squared values", Some(0.0), None),
                CarrierStat::CrestFactor => ("Peak magnitude over RMS", Some(0.0), None),
            },
            Base::Spectral { stat } => match stat {
                SpectralStat::Centroid => ("Magnitude-weighted mean frequency (Hz)", Some(0.0), None),
                SpectralStat::Spread => ("Magnitude-weighted frequency deviation (Hz)", Some(0.0), None),
                SpectralStat::Rolloff => ("Frequency below which 85% of the magnitude lies (Hz)", Some(0.0), None),
                SpectralStat::Flatness => ("Geometric over arithmetic mean of the power spectrum", Some(0.0), Some(1.0)),
                SpectralStat::DominantFrequency => ("Frequency of the largest magnitude bin (Hz)", Some(0.0), None),
            },
            Base::Peak { stat } => match stat {
                PeakStat::Count => ("Local maxima above mean + 0.5 std", Some(0.0), None),
                PeakStat::MeanHeight => ("Mean peak height above the window mean", Some(0.0), None),
                PeakStat::MeanTroughDepth => ("Mean trough depth below the window mean", Some(0.0), None),
                PeakStat::MeanPeakToTrough => ("Mean drop from a peak to the next trough", None, None),
                PeakStat::MeanInterPeakDistance => ("Mean time between consecutive peaks (s)", Some(0.0), None),
            },
        },
    };
    StatisticInfo {
        description: d.to_string(),
        expected_range: (lo, hi),
    }
}

/// Recomputes one feature value for one raw instance from its definition.
pub fn replay_cell(def: &FeatureDef, instance: &SignalInstance, ctx: &ResolvedContext) -> Result<f64> {
    let bases = def_bases(def);
    let values = instance_base_values(&instance.samples, &bases, ctx)?;
    let (v, _) = def_value(def, |b| {
        let i = bases.iter().position(|x| *x == b).expect("base of this def");
        &values[i]
    });
    Ok(v)
}

/// Recomputes a whole column (dataset order).
pub fn replay_column(def: &FeatureDef, dataset: &SignalDataset, ctx: &ResolvedContext) -> Result<Vec<f64>> {
    dataset
        .instances
        .par_iter()
        .map(|inst| replay_cell(def, inst, ctx))
        .collect()
}

const CACHE_MAGIC: &[u8; 4] = b"FRFM";
const CACHE_VERSION: u32 = 1;

/// Writes a matrix as `magic, version u32, rows u64, cols u64`, then the
/// columns as little-endian f64.
pub fn write_feature_cache(path: &Path, matrix: &FeatureMatrix) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 8 * matrix.n_features() * matrix.n_instances());
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(matrix.n_instances() as u64).to_le_bytes());
    buf.extend_from_slice(&(matrix.n_features() as u64).to_le_bytes());
    for col in &matrix.columns {
        for v in col {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Reads a cache written by [`write_feature_cache`]; levels are unknown and
/// reported as 0.
pub fn read_feature_cache(path: &Path) -> Result<FeatureMatrix> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let bad = |why: &str| Error::Data(format!("{}: {why}", path.display()));
    if buf.len() < 24 || &buf[..4] != CACHE_MAGIC {
        return Err(bad("not a feature cache"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
    if u32_at(4) != CACHE_VERSION {
        return Err(bad("unsupported cache version"));
    }
    let rows = u64_at(8) as usize;
    let cols = u64_at(16) as usize;
    if buf.len() != 24 + 8 * rows * cols {
        return Err(bad("truncated cache"));
    }
    let columns = (0..cols)
        .map(|c| {
            (0..rows)
                .map(|r| f64::from_le_bytes(buf[24 + 8 * (c * rows + r)..][..8].try_into().expect("8 bytes")))
                .collect()
        })
        .collect();
    Ok(FeatureMatrix {
        columns,
        feature_ids: (0..cols).collect(),
        level_of: vec![0; cols],
    })
}
