//! Human-readable feature descriptions rendered from provenance, and their
//! parse-back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    Aggregation, Base, Carrier, Domain, FeatureDef, LocationKind, MappingTable, ProvenanceRecord, TransformKind, WindowIndex,
};

/// A description under a group header (`STFT`, `DWT`, ...), with an
/// optional line locating the feature in its transform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Description {
    pub group: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// The provenance fields a description carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvenanceSummary {
    pub level: u8,
    pub domain: Domain,
    pub transform: TransformKind,
    pub statistic: String,
    pub aggregation: String,
    pub window_index: Option<usize>,
    /// Bin or pseudo-frequency, four decimals.
    pub frequency: Option<String>,
    pub bin_index: Option<usize>,
    pub wavelet: Option<String>,
    pub dwt_level: Option<usize>,
}

impl ProvenanceSummary {
    pub fn of(r: &ProvenanceRecord) -> Self {
        let located = matches!(r.location.kind, LocationKind::Bin | LocationKind::DwtLevel);
        ProvenanceSummary {
            level: r.level,
            domain: r.domain,
            transform: r.transform,
            statistic: r.statistic.clone(),
            aggregation: r.aggregation.clone(),
            window_index: match r.window_index {
                WindowIndex::Index(w) => Some(w),
                WindowIndex::All => None,
            },
            frequency: r.location.frequency_hz.filter(|_| located).map(|hz| format!("{hz:.4}")),
            bin_index: r.location.bin_index,
            wavelet: r.transform_params.wavelet_name.clone(),
            dwt_level: r.location.dwt_level,
        }
    }
}

pub const GROUP_STFT: &str = "STFT";
pub const GROUP_DWT: &str = "DWT";
pub const GROUP_TIME: &str = "Time domain";
pub const GROUP_SPECTRAL: &str = "Spectral shape";
pub const GROUP_PEAK: &str = "Peak-trough";
pub const GROUP_DERIVATIVE: &str = "Window-to-window change";
pub const GROUP_RATIO: &str = "Ratio";

const RAW: &str = "the raw signal";
const STFT_COEFFS: &str = "STFT coefficients";
const DWT_COEFFS: &str = "DWT coefficients";
const SPECTRUM: &str = "the STFT magnitude spectrum";

/// (statistic name, phrase); every statistic except bin magnitude.
const PHRASES: &[(&str, &str)] = &[
    ("mean", "Mean"),
    ("std", "Standard deviation"),
    ("rms", "Root mean square"),
    ("min", "Minimum"),
    ("max", "Maximum"),
    ("median", "Median"),
    ("zero_cross_count", "Zero crossing count"),
    ("subband_energy", "Energy"),
    ("subband_std", "Standard deviation"),
    ("skewness", "Skewness"),
    ("kurtosis", "Kurtosis"),
    ("iqr", "Interquartile range"),
    ("entropy", "Shannon entropy"),
    ("energy", "Energy"),
    ("crest_factor", "Crest factor"),
    ("spectral_centroid", "Spectral centroid"),
    ("spectral_spread", "Spectral spread"),
    ("spectral_rolloff", "Spectral rolloff"),
    ("spectral_flatness", "Spectral flatness"),
    ("dominant_frequency", "Dominant frequency"),
    ("peak_count", "Peak count"),
    ("mean_peak_height", "Mean peak height"),
    ("mean_trough_depth", "Mean trough depth"),
    ("mean_peak_to_trough", "Mean peak-to-trough amplitude"),
    ("mean_inter_peak_distance", "Mean inter-peak distance"),
];

fn phrase(statistic: &str) -> &'static str {
    PHRASES
        .iter()
        .find(|p| p.0 == statistic)
        .map_or("Value", |p| p.1)
}

fn carrier_of(base: &Base) -> &'static str {
    match base {
        Base::Td { .. } | Base::Peak { .. } | Base::Carrier { carrier: Carrier::Raw, .. } => RAW,
        Base::Bin { .. } | Base::Carrier { carrier: Carrier::Stft, .. } => STFT_COEFFS,
        Base::Spectral { .. } => SPECTRUM,
        Base::SubBand { .. } | Base::Carrier { carrier: Carrier::SubBand(_), .. } => DWT_COEFFS,
    }
}

fn group_of(base: &Base) -> &'static str {
    match base {
        Base::Td { .. } | Base::Carrier { carrier: Carrier::Raw, .. } => GROUP_TIME,
        Base::Bin { .. } | Base::Carrier { carrier: Carrier::Stft, .. } => GROUP_STFT,
        Base::Spectral { .. } => GROUP_SPECTRAL,
        Base::Peak { .. } => GROUP_PEAK,
        Base::SubBand { .. } | Base::Carrier { carrier: Carrier::SubBand(_), .. } => GROUP_DWT,
    }
}

fn agg_suffix(a: Aggregation) -> String {
    match a {
        Aggregation::Mean => String::new(),
        Aggregation::Window(w) => format!(", window {w}"),
        other => format!(", {} over windows", other.name()),
    }
}

fn base_text(base: &Base, r: &ProvenanceRecord) -> String {
    match base {
        Base::Bin { .. } => format!("Frequency: {:.4} Hz", r.location.frequency_hz.unwrap_or(f64::NAN)),
        _ => format!("{} of {}", phrase(&base.statistic()), carrier_of(base)),
    }
}

/// Long transform name used in change descriptions.
fn windowed(base: &Base) -> &'static str {
    match carrier_of(base) {
        DWT_COEFFS => "windowed discrete wavelet transform (DWT) coefficients",
        STFT_COEFFS => "windowed short-time Fourier transform (STFT) coefficients",
        SPECTRUM => "the windowed STFT magnitude spectrum",
        _ => "the windowed raw signal",
    }
}

fn detail_of(r: &ProvenanceRecord) -> Option<String> {
    match r.location.kind {
        LocationKind::Bin => Some(format!(
            "Bin {} of a {}-point FFT over {} s windows",
            r.location.bin_index?,
            r.transform_params.n_fft?,
            r.transform_params.window_size_s
        )),
        LocationKind::DwtLevel => Some(format!(
            "DWT Frequency: {:.4} Hz (wavelet {}, level {})",
            r.location.frequency_hz?,
            r.transform_params.wavelet_name.as_deref()?,
            r.location.dwt_level?
        )),
        _ => None,
    }
}

/// Deterministic description of one record.
pub fn describe_record(r: &ProvenanceRecord) -> Description {
    let (group, text) = match &r.definition {
        FeatureDef::Base { base, aggregation } => (
            group_of(base).to_string(),
            base_text(base, r) + &agg_suffix(*aggregation),
        ),
        FeatureDef::Derivative { base } => {
            let stat = phrase(&base.statistic()).to_lowercase();
            let stat = if matches!(base, Base::Bin { .. }) { "magnitude".to_string() } else { stat };
            (
                GROUP_DERIVATIVE.to_string(),
                format!("Difference of {stat} values of {}", windowed(base)),
            )
        }
        FeatureDef::Ratio {
            numerator,
            denominator,
            aggregation,
        } => (
            GROUP_RATIO.to_string(),
            format!(
                "Ratio of [{}] to [{}]{}",
                base_text(numerator, r),
                base_text(denominator, r),
                agg_suffix(*aggregation)
            ),
        ),
    };
    Description {
        group,
        text,
        detail: detail_of(r),
    }
}

pub fn describe(feature_id: usize, table: &MappingTable) -> Result<(Description, &ProvenanceRecord)> {
    let r = table.record(feature_id)?;
    Ok((describe_record(r), r))
}

fn bad(text: &str) -> Error {
    Error::Data(format!("unrecognized feature description '{text}'"))
}

fn split_agg(text: &str) -> (&str, String, Option<usize>) {
    if let Some(i) = text.rfind(", window ") {
        if let Ok(w) = text[i + 9..].parse::<usize>() {
            return (&text[..i], "window".to_string(), Some(w));
        }
    }
    for name in ["min", "max", "std"] {
        if let Some(stripped) = text.strip_suffix(&format!(", {name} over windows")) {
            return (stripped, name.to_string(), None);
        }
    }
    (text, "mean".to_string(), None)
}

/// Statistic, domain, transform and level of a "<phrase> of <carrier>" text.
fn parse_base(text: &str) -> Option<(String, Domain, TransformKind, u8)> {
    if text.starts_with("Frequency: ") {
        return Some(("bin_magnitude".into(), Domain::Frequency, TransformKind::Stft, 1));
    }
    let (p, carrier) = text.split_once(" of ")?;
    let candidates: Vec<&str> = PHRASES.iter().filter(|x| x.1 == p).map(|x| x.0).collect();
    let td = ["mean", "std", "rms", "min", "max", "median", "zero_cross_count"];
    let pick = |f: &dyn Fn(&str) -> bool| candidates.iter().find(|s| f(s)).map(|s| s.to_string());
    match carrier {
        RAW => {
            let s = pick(&|s| !s.starts_with("subband") && !s.starts_with("spectral") && s != "dominant_frequency")?;
            let level = if td.contains(&s.as_str()) { 1 } else { 2 };
            Some((s, Domain::Time, TransformKind::None, level))
        }
        STFT_COEFFS => Some((pick(&|s| !s.starts_with("subband") && !td.contains(&s))?, Domain::Frequency, TransformKind::Stft, 2)),
        SPECTRUM => Some((pick(&|s| s.starts_with("spectral") || s == "dominant_frequency")?, Domain::Frequency, TransformKind::Stft, 2)),
        DWT_COEFFS => {
            let s = pick(&|s| s.starts_with("subband")).or_else(|| pick(&|s| !td.contains(&s)))?;
            let level = if s.starts_with("subband") { 1 } else { 2 };
            Some((s, Domain::Wavelet, TransformKind::Dwt, level))
        }
        _ => None,
    }
}

fn parse_detail(detail: Option<&str>, frequency_text: Option<&str>) -> Result<(Option<String>, Option<usize>, Option<String>, Option<usize>)> {
    let Some(d) = detail else {
        return Ok((frequency_text.map(str::to_string), None, None, None));
    };
    if let Some(rest) = d.strip_prefix("Bin ") {
        let bin = rest.split_whitespace().next().and_then(|b| b.parse().ok()).ok_or_else(|| bad(d))?;
        return Ok((frequency_text.map(str::to_string), Some(bin), None, None));
    }
    let rest = d
        .strip_prefix("DWT Frequency: ")
        .map(|r| r.strip_prefix("(harmonic) ").unwrap_or(r))
        .ok_or_else(|| bad(d))?;
    let (hz, tail) = rest.split_once(" Hz (wavelet ").ok_or_else(|| bad(d))?;
    let (wavelet, level) = tail
        .strip_suffix(')')
        .and_then(|t| t.split_once(", level "))
        .ok_or_else(|| bad(d))?;
    let level = level.parse().map_err(|_| bad(d))?;
    Ok((Some(hz.to_string()), None, Some(wavelet.to_string()), Some(level)))
}

/// Recovers the provenance fields from a rendered description.
pub fn parse_description(d: &Description) -> Result<ProvenanceSummary> {
    let text = d.text.as_str();
    let (statistic, domain, transform, level, aggregation, window_index, anchor_text) = if d.group == GROUP_DERIVATIVE {
        let rest = text.strip_prefix("Difference of ").ok_or_else(|| bad(text))?;
        let (stat, carrier) = rest.split_once(" values of ").ok_or_else(|| bad(text))?;
        let carrier = match carrier {
            "windowed discrete wavelet transform (DWT) coefficients" => DWT_COEFFS,
            "windowed short-time Fourier transform (STFT) coefficients" => STFT_COEFFS,
            "the windowed STFT magnitude spectrum" => SPECTRUM,
            "the windowed raw signal" => RAW,
            _ => return Err(bad(text)),
        };
        let (s, dom, tr, _) = if stat == "magnitude" {
            parse_base("Frequency: ").ok_or_else(|| bad(text))?
        } else {
            let cap = stat[..1].to_uppercase() + &stat[1..];
            parse_base(&format!("{cap} of {carrier}")).ok_or_else(|| bad(text))?
        };
        (format!("derivative_{s}"), dom, tr, 3, "mean_abs_diff".to_string(), None, None)
    } else if d.group == GROUP_RATIO {
        let (body, agg, w) = split_agg(text);
        let inner = body
            .strip_prefix("Ratio of [")
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| bad(text))?;
        let (num, _) = inner.split_once("] to [").ok_or_else(|| bad(text))?;
        let (_, dom, tr, _) = parse_base(num).ok_or_else(|| bad(text))?;
        ("ratio".to_string(), dom, tr, 3, agg, w, Some(num.to_string()))
    } else {
        let (body, agg, w) = split_agg(text);
        let (s, dom, tr, lvl) = parse_base(body).ok_or_else(|| bad(text))?;
        (s, dom, tr, lvl, agg, w, Some(body.to_string()))
    };
    let freq_text = anchor_text
        .as_deref()
        .and_then(|t| t.strip_prefix("Frequency: "))
        .and_then(|t| t.strip_suffix(" Hz"));
    let (frequency, bin_index, wavelet, dwt_level) = parse_detail(d.detail.as_deref(), freq_text)?;
    Ok(ProvenanceSummary {
        level,
        domain,
        transform,
        statistic,
        aggregation,
        window_index,
        frequency,
        bin_index,
        wavelet,
        dwt_level,
    })
}

/// Selected features that differ only in their window, merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowGroup {
    pub lineage_key: String,
    /// In input order.
    pub feature_ids: Vec<usize>,
    /// Ascending; empty when the feature is aggregated over windows.
    pub windows: Vec<usize>,
}

/// Groups `ids` by lineage; groups keep the order of their first member.
pub fn compress_across_windows(ids: &[usize], table: &MappingTable) -> Result<Vec<WindowGroup>> {
    let mut groups: Vec<WindowGroup> = Vec::new();
    for &id in ids {
        let r = table.record(id)?;
        let lineage = r.definition.lineage_key();
        let pos = match groups.iter().position(|g| g.lineage_key == lineage) {
            Some(p) => p,
            None => {
                groups.push(WindowGroup {
                    lineage_key: lineage,
                    feature_ids: Vec::new(),
                    windows: Vec::new(),
                });
                groups.len() - 1
            }
        };
        let g = &mut groups[pos];
        if !g.feature_ids.contains(&id) {
            g.feature_ids.push(id);
            if let WindowIndex::Index(w) = r.window_index {
                g.windows.push(w);
            }
        }
    }
    for g in &mut groups {
        g.windows.sort_unstable();
    }
    Ok(groups)
}

/// Description of a window group: the window suffix lists every window.
pub fn describe_group(group: &WindowGroup, table: &MappingTable) -> Result<Description> {
    let first = *group
        .feature_ids
        .first()
        .ok_or_else(|| Error::Invariant("empty window group".into()))?;
    let mut d = describe_record(table.record(first)?);
    if group.windows.len() > 1 {
        if let Some(i) = d.text.rfind(", window ") {
            let list: Vec<String> = group.windows.iter().map(usize::to_string).collect();
            d.text = format!("{}, windows {}", &d.text[..i], list.join(", "));
        }
    }
    Ok(d)
}
