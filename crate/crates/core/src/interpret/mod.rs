//! Plain-language reading of recommended features: descriptions, harmonic
//! matching against known fault frequencies, class value ranges and expert
//! weighting for a rerun.

mod describe;
mod harmonics;
mod report;
mod weights;

pub use describe::{
    compress_across_windows, describe, describe_group, describe_record, parse_description, Description,
    ProvenanceSummary, WindowGroup, GROUP_DERIVATIVE, GROUP_DWT, GROUP_PEAK, GROUP_RATIO, GROUP_SPECTRAL, GROUP_STFT,
    GROUP_TIME,
};
pub use harmonics::{
    match_harmonics, read_fundamentals, validate_fundamentals, value_ranges, ClassRange, FiveNumber,
    FundamentalFrequency, HarmonicMatch, DEFAULT_MAX_HARMONIC, DEFAULT_TOLERANCE,
};
pub use report::{
    build_report, train_values, FeatureRanges, HarmonicSettings, InterpretationReport, ReportItem, RunSummary,
    REPORT_SCHEMA_VERSION,
};
pub use weights::{apply_expert_weights, ExpertWeights, Selector, WeightEntry, WeightedConfig, MAX_WEIGHT};
