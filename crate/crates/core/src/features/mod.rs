//! Hierarchical feature generation.
//!
//! Level 1 holds basic time-domain statistics, STFT bin magnitudes and DWT
//! sub-band energy/std; level 2 applies higher statistics to the raw window,
//! the STFT magnitudes and each sub-band, plus spectral-shape and
//! peak-trough features; level 3 adds window-to-window derivatives and
//! pairwise ratios of the most relevant level-2 features. Pools are
//! cumulative and every column carries a provenance record.

mod context;
mod defs;
mod extract;
mod pool;

pub use context::{FeatureConfig, ResolvedContext, ScalePlan};
pub use defs::{
    Aggregation, Band, Base, Carrier, CarrierStat, Domain, FeatureDef, Location, LocationKind,
    PeakStat, ProvenanceRecord, SpectralStat, SubBandStat, TdStat, TransformKind,
    TransformParams, WindowIndex, WindowScale,
};
pub use extract::{
    aggregate, carrier_stat, mean_abs_diff, peak_stat, peaks_and_troughs, spectral_stat, td_stat,
    RATIO_EPSILON, ROLLOFF_FRACTION,
};
pub use pool::{
    build_feature_pool, fold_wavelet, mapping_table, read_feature_cache, replay_cell,
    replay_column, write_feature_cache, FeatureMatrix, FeaturePool, MappingTable, StatisticInfo,
};
