//! Feature definitions and their provenance.
//!
//! A [`FeatureDef`] fully determines how one column is computed from a raw
//! instance (given the shared [`FeatureConfig`](super::FeatureConfig)), so any
//! cell can be replayed from its mapping-table entry alone.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Time,
    Frequency,
    Wavelet,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Time => "time",
            Domain::Frequency => "frequency",
            Domain::Wavelet => "wavelet",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    None,
    Stft,
    Dwt,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            TransformKind::None => "none",
            TransformKind::Stft => "stft",
            TransformKind::Dwt => "dwt",
        }
    }
}

/// Basic time-domain statistics of the raw segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TdStat {
    Mean,
    Std,
    Rms,
    Min,
    Max,
    Median,
    ZeroCross,
}

impl TdStat {
    pub const ALL: [TdStat; 7] = [
        TdStat::Mean,
        TdStat::Std,
        TdStat::Rms,
        TdStat::Min,
        TdStat::Max,
        TdStat::Median,
        TdStat::ZeroCross,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubBandStat {
    Energy,
    Std,
}

/// Statistics applied to every carrier (raw segment, STFT magnitudes, DWT
/// sub-bands).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierStat {
    Skewness,
    Kurtosis,
    Iqr,
    Entropy,
    Energy,
    CrestFactor,
}

impl CarrierStat {
    pub const ALL: [CarrierStat; 6] = [
        CarrierStat::Skewness,
        CarrierStat::Kurtosis,
        CarrierStat::Iqr,
        CarrierStat::Entropy,
        CarrierStat::Energy,
        CarrierStat::CrestFactor,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralStat {
    Centroid,
    Spread,
    Rolloff,
    Flatness,
    DominantFrequency,
}

impl SpectralStat {
    pub const ALL: [SpectralStat; 5] = [
        SpectralStat::Centroid,
        SpectralStat::Spread,
        SpectralStat::Rolloff,
        SpectralStat::Flatness,
        SpectralStat::DominantFrequency,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakStat {
    Count,
    MeanHeight,
    MeanTroughDepth,
    MeanPeakToTrough,
    MeanInterPeakDistance,
}

impl PeakStat {
    pub const ALL: [PeakStat; 5] = [
        PeakStat::Count,
        PeakStat::MeanHeight,
        PeakStat::MeanTroughDepth,
        PeakStat::MeanPeakToTrough,
        PeakStat::MeanInterPeakDistance,
    ];
}

/// One DWT detail sub-band.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Band {
    pub wavelet: String,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Carrier {
    Raw,
    Stft,
    SubBand(Band),
}

/// STFT window length relative to the configured window plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowScale {
    Half,
    #[default]
    Unit,
    Double,
}

impl WindowScale {
    pub fn factor(self) -> f64 {
        match self {
            WindowScale::Half => 0.5,
            WindowScale::Unit => 1.0,
            WindowScale::Double => 2.0,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            WindowScale::Half => "x0.5",
            WindowScale::Unit => "x1",
            WindowScale::Double => "x2",
        }
    }
}

/// A per-window scalar computed from one segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Base {
    Td { stat: TdStat },
    Bin { bin: usize, scale: WindowScale },
    SubBand { band: Band, stat: SubBandStat },
    Carrier { carrier: Carrier, stat: CarrierStat },
    Spectral { stat: SpectralStat },
    Peak { stat: PeakStat },
}

impl Base {
    pub fn level(&self) -> u8 {
        match self {
            Base::Td { .. } | Base::Bin { .. } | Base::SubBand { .. } => 1,
            _ => 2,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Base::Td { .. } | Base::Peak { .. } => Domain::Time,
            Base::Carrier { carrier: Carrier::Raw, .. } => Domain::Time,
            Base::Bin { .. } | Base::Spectral { .. } => Domain::Frequency,
            Base::Carrier { carrier: Carrier::Stft, .. } => Domain::Frequency,
            Base::SubBand { .. } | Base::Carrier { carrier: Carrier::SubBand(_), .. } => {
                Domain::Wavelet
            }
        }
    }

    pub fn transform(&self) -> TransformKind {
        match self.domain() {
            Domain::Time => TransformKind::None,
            Domain::Frequency => TransformKind::Stft,
            Domain::Wavelet => TransformKind::Dwt,
        }
    }

    pub fn band(&self) -> Option<&Band> {
        match self {
            Base::SubBand { band, .. } => Some(band),
            Base::Carrier { carrier: Carrier::SubBand(band), .. } => Some(band),
            _ => None,
        }
    }

    pub fn scale(&self) -> WindowScale {
        match self {
            Base::Bin { scale, .. } => *scale,
            _ => WindowScale::Unit,
        }
    }

    /// Machine-readable statistic name.
    pub fn statistic(&self) -> String {
        let s = match self {
            Base::Td { stat } => match stat {
                TdStat::Mean => "mean",
                TdStat::Std => "std",
                TdStat::Rms => "rms",
                TdStat::Min => "min",
                TdStat::Max => "max",
                TdStat::Median => "median",
                TdStat::ZeroCross => "zero_cross_count",
            },
            Base::Bin { .. } => "bin_magnitude",
            Base::SubBand { stat, .. } => match stat {
                SubBandStat::Energy => "subband_energy",
                SubBandStat::Std => "subband_std",
            },
            Base::Carrier { stat, .. } => match stat {
                CarrierStat::Skewness => "skewness",
                CarrierStat::Kurtosis => "kurtosis",
                CarrierStat::Iqr => "iqr",
                CarrierStat::Entropy => "entropy",
                CarrierStat::Energy => "energy",
                CarrierStat::CrestFactor => "crest_factor",
            },
            Base::Spectral { stat } => match stat {
                SpectralStat::Centroid => "spectral_centroid",
                SpectralStat::Spread => "spectral_spread",
                SpectralStat::Rolloff => "spectral_rolloff",
                SpectralStat::Flatness => "spectral_flatness",
                SpectralStat::DominantFrequency => "dominant_frequency",
            },
            Base::Peak { stat } => match stat {
                PeakStat::Count => "peak_count",
                PeakStat::MeanHeight => "mean_peak_height",
                PeakStat::MeanTroughDepth => "mean_trough_depth",
                PeakStat::MeanPeakToTrough => "mean_peak_to_trough",
                PeakStat::MeanInterPeakDistance => "mean_inter_peak_distance",
            },
        };
        s.to_string()
    }

    /// Canonical key fragment; the domain leads so that within a level
    /// frequency < time < wavelet, and numeric parts are zero padded.
    pub fn key(&self) -> String {
        let d = self.domain().name();
        match self {
            Base::Td { .. } | Base::Peak { .. } => format!("{d}|raw|{}", self.statistic()),
            Base::Bin { bin, scale } => format!("{d}|stft{}|bin{bin:05}", scale.tag()),
            Base::Spectral { .. } => format!("{d}|stft|{}", self.statistic()),
            Base::SubBand { band, .. } => {
                format!("{d}|{}|band{:02}|{}", band.wavelet, band.level, self.statistic())
            }
            Base::Carrier { carrier, .. } => match carrier {
                Carrier::Raw => format!("{d}|raw|carrier_{}", self.statistic()),
                Carrier::Stft => format!("{d}|stft|carrier_{}", self.statistic()),
                Carrier::SubBand(band) => format!(
                    "{d}|{}|band{:02}|carrier_{}",
                    band.wavelet,
                    band.level,
                    self.statistic()
                ),
            },
        }
    }
}

/// How per-window values collapse to one per-instance value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    Min,
    Max,
    Std,
    /// No aggregation: the value of one window.
    Window(usize),
}

impl Aggregation {
    fn tag(self) -> String {
        match self {
            Aggregation::Mean => "mean".into(),
            Aggregation::Min => "min".into(),
            Aggregation::Max => "max".into(),
            Aggregation::Std => "std".into(),
            Aggregation::Window(w) => format!("w{w:04}"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Min => "min",
            Aggregation::Max => "max",
            Aggregation::Std => "std",
            Aggregation::Window(_) => "window",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDef {
    /// A per-window statistic, aggregated.
    Base { base: Base, aggregation: Aggregation },
    /// Per-window ratio `numerator / denominator`, aggregated.
    Ratio {
        numerator: Base,
        denominator: Base,
        aggregation: Aggregation,
    },
    /// Mean absolute difference of a statistic between consecutive windows.
    Derivative { base: Base },
}

impl FeatureDef {
    pub fn level(&self) -> u8 {
        match self {
            FeatureDef::Base { base, .. } => base.level(),
            _ => 3,
        }
    }

    /// The base whose domain and location the feature reports.
    pub fn anchor(&self) -> &Base {
        match self {
            FeatureDef::Base { base, .. } | FeatureDef::Derivative { base } => base,
            FeatureDef::Ratio { numerator, .. } => numerator,
        }
    }

    pub fn aggregation(&self) -> Option<Aggregation> {
        match self {
            FeatureDef::Base { aggregation, .. } | FeatureDef::Ratio { aggregation, .. } => {
                Some(*aggregation)
            }
            FeatureDef::Derivative { .. } => None,
        }
    }

    pub fn statistic(&self) -> String {
        match self {
            FeatureDef::Base { base, .. } => base.statistic(),
            FeatureDef::Ratio { .. } => "ratio".into(),
            FeatureDef::Derivative { base } => format!("derivative_{}", base.statistic()),
        }
    }

    /// Canonical provenance key. Sorting by it fixes feature ids.
    pub fn key(&self) -> String {
        match self {
            FeatureDef::Base { base, aggregation } => {
                format!("L{}|{}|{}", base.level(), base.key(), aggregation.tag())
            }
            FeatureDef::Ratio {
                numerator,
                denominator,
                aggregation,
            } => format!(
                "L3|ratio|{}|over|{}|{}",
                numerator.key(),
                denominator.key(),
                aggregation.tag()
            ),
            FeatureDef::Derivative { base } => format!("L3|derivative|{}", base.key()),
        }
    }

    /// Key with the window index removed; features sharing it differ only in
    /// which window they were taken from.
    pub fn lineage_key(&self) -> String {
        match self.aggregation() {
            Some(Aggregation::Window(_)) => {
                let k = self.key();
                k[..k.rfind('|').unwrap_or(k.len())].to_string() + "|window"
            }
            _ => self.key(),
        }
    }
}

impl fmt::Display for FeatureDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Parameters of the transform a feature came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub window_size_s: f64,
    pub overlap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_fft: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelet_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwt_level: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationKind {
    None,
    Bin,
    DwtLevel,
    /// A statistic over the whole one-sided spectrum; `frequency_hz` is the
    /// Nyquist frequency.
    Spectrum,
}

/// Where in the transformed vector the value was read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub kind: LocationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwt_level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
}

/// `window_index` is either one window or `"ALL"` after aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowIndex {
    All,
    Index(usize),
}

impl Serialize for WindowIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            WindowIndex::All => s.serialize_str("ALL"),
            WindowIndex::Index(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for WindowIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            N(u64),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(WindowIndex::Index(n as usize)),
            Raw::S(s) if s == "ALL" => Ok(WindowIndex::All),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad window index '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub feature_id: usize,
    pub key: String,
    pub level: u8,
    pub domain: Domain,
    pub transform: TransformKind,
    pub transform_params: TransformParams,
    pub location: Location,
    pub statistic: String,
    pub window_index: WindowIndex,
    /// Aggregation over windows, or `mean_abs_diff` for derivatives.
    pub aggregation: String,
    pub parent_feature_ids: Vec<usize>,
    /// Degenerate-input fallbacks or guarded values seen while computing.
    pub flags: Vec<String>,
    pub definition: FeatureDef,
}
