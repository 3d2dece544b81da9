//! Per-segment statistic kernels and the per-instance window loop.

use std::cell::{OnceCell, RefCell};
use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::stats::{self, Stat};
use crate::transforms::{dwt, stft_magnitude, Spectrum, Taper, WaveletDecomposition};

use super::context::{ResolvedContext, ScalePlan};
use super::defs::{Aggregation, Base, Carrier, CarrierStat, FeatureDef, PeakStat, SpectralStat, SubBandStat, TdStat};

/// Denominator magnitude below which a ratio is reported as 0 and flagged.
pub const RATIO_EPSILON: f64 = 1e-12;
/// Fraction of the total spectral magnitude below the rolloff frequency.
pub const ROLLOFF_FRACTION: f64 = 0.85;

/// One value plus whether a fallback or guard produced it.
pub type Cell = (f64, bool);

/// Lazily computed transforms of one window.
pub(crate) struct SegmentCache<'s> {
    seg: &'s [f64],
    rate: f64,
    n_fft: usize,
    taper: Taper,
    dwt_levels: usize,
    spectrum: OnceCell<Spectrum>,
    dwt: RefCell<HashMap<String, WaveletDecomposition>>,
}

impl<'s> SegmentCache<'s> {
    pub(crate) fn new(seg: &'s [f64], rate: f64, plan: &ScalePlan, taper: Taper, dwt_levels: usize) -> Self {
        SegmentCache {
            seg,
            rate,
            n_fft: plan.n_fft,
            taper,
            dwt_levels,
            spectrum: OnceCell::new(),
            dwt: RefCell::new(HashMap::new()),
        }
    }

    fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = stft_magnitude(self.seg, self.rate, self.n_fft, self.taper)?;
        Ok(self.spectrum.get_or_init(|| s))
    }

    fn detail(&self, wavelet: &str, level: usize) -> Result<Vec<f64>> {
        if level == 0 || level > self.dwt_levels {
            return Err(Error::Config(format!(
                "DWT level {level} outside 1..={}",
                self.dwt_levels
            )));
        }
        let mut cache = self.dwt.borrow_mut();
        if !cache.contains_key(wavelet) {
            let d = dwt(self.seg, wavelet, self.dwt_levels, self.rate)?;
            cache.insert(wavelet.to_string(), d);
        }
        Ok(cache[wavelet].detail_coeffs[level - 1].clone())
    }
}

fn plain(v: f64) -> Cell {
    (v, false)
}

fn from_stat(s: Stat) -> Cell {
    (s.value, s.degenerate)
}

pub fn td_stat(seg: &[f64], stat: TdStat) -> f64 {
    match stat {
        TdStat::Mean => stats::mean(seg),
        TdStat::Std => stats::std_dev(seg),
        TdStat::Rms => stats::rms(seg),
        TdStat::Min => stats::min(seg),
        TdStat::Max => stats::max(seg),
        TdStat::Median => stats::median(seg),
        TdStat::ZeroCross => stats::zero_cross_count(seg) as f64,
    }
}

pub fn carrier_stat(x: &[f64], stat: CarrierStat) -> Cell {
    match stat {
        CarrierStat::Skewness => from_stat(stats::skewness(x)),
        CarrierStat::Kurtosis => from_stat(stats::excess_kurtosis(x)),
        CarrierStat::Iqr => plain(stats::iqr(x)),
        CarrierStat::Entropy => from_stat(stats::shannon_entropy(x)),
        CarrierStat::Energy => plain(stats::energy(x)),
        CarrierStat::CrestFactor => from_stat(stats::crest_factor(x)),
    }
}

pub fn spectral_stat(spec: &Spectrum, stat: SpectralStat) -> Cell {
    let m = &spec.magnitudes;
    let total: f64 = m.iter().sum();
    let freq = |k: usize| spec.frequency_of(k);
    match stat {
        SpectralStat::Centroid | SpectralStat::Spread if total <= 0.0 => (0.0, true),
        SpectralStat::Centroid => plain(centroid(spec, total)),
        SpectralStat::Spread => {
            let c = centroid(spec, total);
            let var: f64 = m
                .iter()
                .enumerate()
                .map(|(k, a)| (freq(k) - c).powi(2) * a)
                .sum::<f64>()
                / total;
            plain(var.sqrt())
        }
        SpectralStat::Rolloff => {
            if total <= 0.0 {
                return (0.0, true);
            }
            let target = ROLLOFF_FRACTION * total;
            let mut acc = 0.0;
            for (k, a) in m.iter().enumerate() {
                acc += a;
                if acc >= target {
                    return plain(freq(k));
                }
            }
            plain(freq(m.len() - 1))
        }
        SpectralStat::Flatness => {
            let p: Vec<f64> = m.iter().map(|a| a * a).collect();
            let am = stats::mean(&p);
            if am <= 0.0 {
                return (1.0, true);
            }
            let log_mean = p.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / p.len() as f64;
            plain(log_mean.exp() / am)
        }
        SpectralStat::DominantFrequency => {
            if total <= 0.0 {
                return (0.0, true);
            }
            plain(freq(spec.argmax()))
        }
    }
}

fn centroid(spec: &Spectrum, total: f64) -> f64 {
    spec.magnitudes
        .iter()
        .enumerate()
        .map(|(k, a)| spec.frequency_of(k) * a)
        .sum::<f64>()
        / total
}

/// Strict local maxima above `mean + 0.5 std` and strict local minima below
/// `mean - 0.5 std`.
pub fn peaks_and_troughs(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mu = stats::mean(x);
    let sd = stats::std_dev(x);
    let (hi, lo) = (mu + 0.5 * sd, mu - 0.5 * sd);
    let mut peaks = Vec::new();
    let mut troughs = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if x[i] > x[i - 1] && x[i] > x[i + 1] && x[i] > hi {
            peaks.push(i);
        }
        if x[i] < x[i - 1] && x[i] < x[i + 1] && x[i] < lo {
            troughs.push(i);
        }
    }
    (peaks, troughs)
}

fn mean_or_fallback(v: &[f64]) -> Cell {
    if v.is_empty() {
        (0.0, true)
    } else {
        plain(stats::mean(v))
    }
}

pub fn peak_stat(x: &[f64], rate: f64, stat: PeakStat) -> Cell {
    let (peaks, troughs) = peaks_and_troughs(x);
    let mu = stats::mean(x);
    match stat {
        PeakStat::Count => plain(peaks.len() as f64),
        PeakStat::MeanHeight => {
            mean_or_fallback(&peaks.iter().map(|&p| x[p] - mu).collect::<Vec<_>>())
        }
        PeakStat::MeanTroughDepth => {
            mean_or_fallback(&troughs.iter().map(|&t| mu - x[t]).collect::<Vec<_>>())
        }
        PeakStat::MeanPeakToTrough => {
            let amps: Vec<f64> = peaks
                .iter()
                .filter_map(|&p| {
                    let t = troughs.partition_point(|&t| t < p);
                    troughs.get(t).map(|&t| x[p] - x[t])
                })
                .collect();
            mean_or_fallback(&amps)
        }
        PeakStat::MeanInterPeakDistance => {
            let gaps: Vec<f64> = peaks
                .windows(2)
                .map(|w| (w[1] - w[0]) as f64 / rate)
                .collect();
            mean_or_fallback(&gaps)
        }
    }
}

/// Value of one base statistic on one window.
pub(crate) fn base_value(base: &Base, cache: &SegmentCache<'_>) -> Result<Cell> {
    let seg = cache.seg;
    Ok(match base {
        Base::Td { stat } => plain(td_stat(seg, *stat)),
        Base::Bin { bin, .. } => {
            let spec = cache.spectrum()?;
            let m = spec.magnitudes.get(*bin).ok_or_else(|| {
                Error::Config(format!(
                    "STFT bin {bin} outside the {}-bin spectrum",
                    spec.magnitudes.len()
                ))
            })?;
            plain(*m)
        }
        Base::SubBand { band, stat } => {
            let d = cache.detail(&band.wavelet, band.level)?;
            plain(match stat {
                SubBandStat::Energy => stats::energy(&d),
                SubBandStat::Std => stats::std_dev(&d),
            })
        }
        Base::Carrier { carrier, stat } => match carrier {
            Carrier::Raw => carrier_stat(seg, *stat),
            Carrier::Stft => carrier_stat(&cache.spectrum()?.magnitudes, *stat),
            Carrier::SubBand(band) => carrier_stat(&cache.detail(&band.wavelet, band.level)?, *stat),
        },
        Base::Spectral { stat } => spectral_stat(cache.spectrum()?, *stat),
        Base::Peak { stat } => peak_stat(seg, cache.rate, *stat),
    })
}

/// Per-window values of each base for one instance: `out[b][w]`.
pub(crate) fn instance_base_values(
    samples: &[f64],
    bases: &[&Base],
    ctx: &ResolvedContext,
) -> Result<Vec<Vec<Cell>>> {
    let mut by_scale: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for (i, b) in bases.iter().enumerate() {
        by_scale.entry(b.scale()).or_default().push(i);
    }
    let mut out = vec![Vec::new(); bases.len()];
    for (scale, members) in by_scale {
        let plan = ctx.plan(scale)?;
        for w in 0..plan.n_windows {
            let start = w * plan.hop;
            let seg = samples.get(start..start + plan.window_len).ok_or(Error::WindowTooLong {
                window: start + plan.window_len,
                len: samples.len(),
            })?;
            let cache = SegmentCache::new(seg, ctx.rate, plan, ctx.taper, ctx.dwt_levels);
            for &i in &members {
                out[i].push(base_value(bases[i], &cache)?);
            }
        }
    }
    Ok(out)
}

pub fn aggregate(values: &[f64], aggregation: Aggregation) -> f64 {
    match aggregation {
        Aggregation::Mean => stats::mean(values),
        Aggregation::Min => stats::min(values),
        Aggregation::Max => stats::max(values),
        Aggregation::Std => stats::std_dev(values),
        Aggregation::Window(w) => values[w],
    }
}

/// Mean absolute difference between consecutive windows.
pub fn mean_abs_diff(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (values.len() - 1) as f64
}

/// Why a cell needed a fallback.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellFlags {
    pub degenerate: bool,
    pub ratio_guard: bool,
    pub non_finite: bool,
}

/// Per-instance value of `def` given the per-window values of its bases
/// (`values(base)` returns them).
pub(crate) fn def_value<'v>(
    def: &FeatureDef,
    values: impl Fn(&Base) -> &'v [Cell],
) -> (f64, CellFlags) {
    let mut flags = CellFlags::default();
    let v = match def {
        FeatureDef::Base { base, aggregation } => {
            let cells = values(base);
            let xs: Vec<f64> = cells.iter().map(|c| c.0).collect();
            flags.degenerate = match aggregation {
                Aggregation::Window(w) => cells[*w].1,
                _ => cells.iter().any(|c| c.1),
            };
            aggregate(&xs, *aggregation)
        }
        FeatureDef::Ratio {
            numerator,
            denominator,
            aggregation,
        } => {
            let a = values(numerator);
            let b = values(denominator);
            let ratios: Vec<f64> = a
                .iter()
                .zip(b)
                .map(|(a, b)| {
                    if b.0.abs() < RATIO_EPSILON {
                        flags.ratio_guard = true;
                        0.0
                    } else {
                        a.0 / b.0
                    }
                })
                .collect();
            flags.degenerate = a.iter().chain(b).any(|c| c.1);
            aggregate(&ratios, *aggregation)
        }
        FeatureDef::Derivative { base } => {
            let cells = values(base);
            flags.degenerate = cells.iter().any(|c| c.1);
            mean_abs_diff(&cells.iter().map(|c| c.0).collect::<Vec<_>>())
        }
    };
    if v.is_finite() {
        (v, flags)
    } else {
        flags.non_finite = true;
        (0.0, flags)
    }
}

/// Bases a definition reads.
pub fn def_bases(def: &FeatureDef) -> Vec<&Base> {
    match def {
        FeatureDef::Base { base, .. } | FeatureDef::Derivative { base } => vec![base],
        FeatureDef::Ratio {
            numerator,
            denominator,
            ..
        } => vec![numerator, denominator],
    }
}
