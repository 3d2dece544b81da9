//! Orthogonal discrete wavelet transform (Mallat cascade, symmetric boundary
//! extension), the mother-wavelet library and energy/entropy scoring.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::spectrum::dft;
use crate::error::{Error, Result};

const LIBRARY_JSON: &str = include_str!("../../data/wavelets.json");

/// Library members in their canonical order.
pub const WAVELET_LIBRARY: [&str; 7] = ["haar", "db2", "db4", "db8", "sym4", "sym8", "coif3"];

/// Floor applied to wavelet entropy before forming the energy/entropy ratio.
pub const ENTROPY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Wavelet {
    pub name: String,
    pub family: String,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
}

impl Wavelet {
    pub fn filter_len(&self) -> usize {
        self.dec_lo.len()
    }
}

#[derive(Deserialize)]
struct LibraryFile {
    schema_version: u32,
    wavelets: Vec<WaveletEntry>,
}

#[derive(Deserialize)]
struct WaveletEntry {
    name: String,
    family: String,
    dec_lo: Vec<f64>,
}

fn library() -> &'static [Wavelet] {
    static LIB: OnceLock<Vec<Wavelet>> = OnceLock::new();
    LIB.get_or_init(|| {
        let file: LibraryFile =
            serde_json::from_str(LIBRARY_JSON).expect("embedded wavelet library is valid JSON");
        assert_eq!(file.schema_version, 1, "unsupported wavelet library version");
        file.wavelets
            .into_iter()
            .map(|e| {
                let n = e.dec_lo.len();
                let dec_hi = (0..n)
                    .map(|k| {
                        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                        sign * e.dec_lo[n - 1 - k]
                    })
                    .collect();
                Wavelet {
                    name: e.name,
                    family: e.family,
                    dec_lo: e.dec_lo,
                    dec_hi,
                }
            })
            .collect()
    })
}

pub fn wavelet(name: &str) -> Result<&'static Wavelet> {
    library()
        .iter()
        .find(|w| w.name == name)
        .ok_or_else(|| Error::UnknownWavelet(name.to_string()))
}

/// Deepest decomposition allowed for a signal of `len` samples,
/// `floor(log2(len)) - 1`.
pub fn max_levels(len: usize) -> usize {
    if len < 2 {
        return 0;
    }
    (usize::BITS - 1 - len.leading_zeros()) as usize - 1
}

/// Half-sample symmetric extension index (`x[-1] = x[0]`, `x[n] = x[n-1]`).
fn reflect(mut k: isize, n: isize) -> usize {
    loop {
        if k < 0 {
            k = -k - 1;
        } else if k >= n {
            k = 2 * n - 1 - k;
        } else {
            return k as usize;
        }
    }
}

/// One analysis step: `out[o] = sum_j filt[j] * ext(x)[2o + 1 - j]`.
fn analysis_step(x: &[f64], w: &Wavelet) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as isize;
    let f = w.filter_len();
    let out_len = (x.len() + f - 1) / 2;
    let mut approx = Vec::with_capacity(out_len);
    let mut detail = Vec::with_capacity(out_len);
    for o in 0..out_len {
        let i = 2 * o as isize + 1;
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..f {
            let v = x[reflect(i - j as isize, n)];
            a += w.dec_lo[j] * v;
            d += w.dec_hi[j] * v;
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

/// Adjoint of [`analysis_step`], truncated to `out_len` samples.
fn synthesis_step(approx: &[f64], detail: &[f64], w: &Wavelet, out_len: usize) -> Vec<f64> {
    let f = w.filter_len();
    let nc = approx.len().min(detail.len());
    (0..out_len)
        .map(|n| {
            // terms with 0 <= 2o + 1 - n <= f - 1
            let lo = n.saturating_sub(1).div_ceil(2);
            let hi = ((n + f - 2) / 2).min(nc.saturating_sub(1));
            let mut acc = 0.0;
            for o in lo..=hi {
                if o >= nc {
                    break;
                }
                let j = 2 * o + 1 - n;
                acc += approx[o] * w.dec_lo[j] + detail[o] * w.dec_hi[j];
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    pub wavelet_name: String,
    pub levels: usize,
    /// Detail coefficients, level 1 (finest) first.
    pub detail_coeffs: Vec<Vec<f64>>,
    pub approx_coeffs: Vec<f64>,
    /// Representative frequency of each detail level, level 1 first.
    pub pseudo_freq_hz: Vec<f64>,
    /// Length of the input to each analysis step, level 1 first.
    pub input_lengths: Vec<usize>,
}

impl WaveletDecomposition {
    /// All coefficients (details then approximation).
    pub fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.detail_coeffs
            .iter()
            .flatten()
            .chain(self.approx_coeffs.iter())
            .copied()
    }
}

pub fn dwt(segment: &[f64], wavelet_name: &str, levels: usize, rate: f64) -> Result<WaveletDecomposition> {
    let w = wavelet(wavelet_name)?;
    let max = max_levels(segment.len());
    if levels == 0 || levels > max {
        return Err(Error::TooManyLevels {
            levels,
            max,
            len: segment.len(),
        });
    }
    let mut approx = segment.to_vec();
    let mut details = Vec::with_capacity(levels);
    let mut lengths = Vec::with_capacity(levels);
    for _ in 0..levels {
        lengths.push(approx.len());
        let (a, d) = analysis_step(&approx, w);
        details.push(d);
        approx = a;
    }
    let pseudo_freq_hz = (1..=levels)
        .map(|l| pseudo_frequency(wavelet_name, l, rate))
        .collect::<Result<_>>()?;
    Ok(WaveletDecomposition {
        wavelet_name: wavelet_name.to_string(),
        levels,
        detail_coeffs: details,
        approx_coeffs: approx,
        pseudo_freq_hz,
        input_lengths: lengths,
    })
}

/// Reconstructs the original signal from a decomposition.
pub fn idwt(decomp: &WaveletDecomposition) -> Result<Vec<f64>> {
    let w = wavelet(&decomp.wavelet_name)?;
    let mut approx = decomp.approx_coeffs.clone();
    for level in (0..decomp.levels).rev() {
        approx = synthesis_step(
            &approx,
            &decomp.detail_coeffs[level],
            w,
            decomp.input_lengths[level],
        );
    }
    Ok(approx)
}

/// Samples per unit of wavelet support used for the center-frequency estimate.
const CASCADE_ITERATIONS: u32 = 8;

/// Samples the wavelet function by the cascade algorithm on the closed support
/// grid `[0, L-1]` (spacing `2^-8`) and returns the dominant DFT frequency in
/// cycles per unit time.
fn compute_center_frequency(w: &Wavelet) -> f64 {
    let f = w.filter_len();
    let s2 = std::f64::consts::SQRT_2;
    // reconstruction filters are the time-reversed decomposition filters
    let h: Vec<f64> = w.dec_lo.iter().rev().map(|v| v * s2).collect();
    let mut psi: Vec<f64> = w.dec_hi.iter().rev().map(|v| v * s2).collect();
    for _ in 1..CASCADE_ITERATIONS {
        let mut up = vec![0.0; 2 * psi.len() - 1];
        for (i, v) in psi.iter().enumerate() {
            up[2 * i] = *v;
        }
        let mut next = vec![0.0; up.len() + f - 1];
        for (i, u) in up.iter().enumerate() {
            if *u == 0.0 {
                continue;
            }
            for (j, hv) in h.iter().enumerate() {
                next[i + j] += u * hv;
            }
        }
        psi = next;
    }
    let per_unit = 1usize << CASCADE_ITERATIONS;
    let n = (f - 1) * per_unit + 1;
    psi.resize(n, 0.0);
    let spec = dft(&psi, n);
    let mut best = (1usize, f64::NEG_INFINITY);
    for (k, c) in spec.iter().enumerate().take(n / 2 + 1).skip(1) {
        let m = c.norm();
        if m > best.1 {
            best = (k, m);
        }
    }
    best.0 as f64 * per_unit as f64 / n as f64
}

/// Center frequency of a library wavelet in cycles/sample (cached).
pub fn center_frequency(wavelet_name: &str) -> Result<f64> {
    static CACHE: OnceLock<HashMap<String, f64>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        library()
            .iter()
            .map(|w| (w.name.clone(), compute_center_frequency(w)))
            .collect()
    });
    cache
        .get(wavelet_name)
        .copied()
        .ok_or_else(|| Error::UnknownWavelet(wavelet_name.to_string()))
}

/// `f_center * rate / 2^level`.
pub fn pseudo_frequency(wavelet_name: &str, level: usize, rate: f64) -> Result<f64> {
    let fc = center_frequency(wavelet_name)?;
    Ok(fc * rate / (1u64 << level) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletScore {
    pub wavelet_name: String,
    /// Mean coefficient energy over scored segments.
    pub energy: f64,
    /// Mean (floored) coefficient entropy over scored segments.
    pub entropy: f64,
    /// Mean energy/entropy ratio over scored segments.
    pub ratio: f64,
    pub segments_scored: usize,
}

/// Energy, floored entropy and their ratio for one full-depth decomposition;
/// `None` for a zero-energy segment.
fn energy_entropy(segment: &[f64], w: &str) -> Result<Option<(f64, f64)>> {
    let levels = max_levels(segment.len()).max(1);
    let d = dwt(segment, w, levels, 1.0)?;
    let energy: f64 = d.coefficients().map(|c| c * c).sum();
    if energy <= 0.0 {
        return Ok(None);
    }
    let entropy: f64 = d
        .coefficients()
        .map(|c| c * c / energy)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(Some((energy, entropy.max(ENTROPY_FLOOR))))
}

fn score_one(segments: &[&[f64]], name: &str) -> Result<(WaveletScore, Vec<Option<f64>>)> {
    let mut per_segment = Vec::with_capacity(segments.len());
    let (mut e_sum, mut h_sum, mut r_sum, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (i, seg) in segments.iter().enumerate() {
        match energy_entropy(seg, name)? {
            Some((e, h)) => {
                e_sum += e;
                h_sum += h;
                r_sum += e / h;
                n += 1;
                per_segment.push(Some(e / h));
            }
            None => {
                log::debug!("wavelet {name}: segment {i} has zero energy, skipped");
                per_segment.push(None);
            }
        }
    }
    let denom = n.max(1) as f64;
    Ok((
        WaveletScore {
            wavelet_name: name.to_string(),
            energy: e_sum / denom,
            entropy: h_sum / denom,
            ratio: r_sum / denom,
            segments_scored: n,
        },
        per_segment,
    ))
}

/// Scores every library wavelet by mean energy/entropy ratio over the
/// segments, sorted best first (ties keep library order).
pub fn score_wavelets(segments: &[&[f64]], library: &[&str]) -> Result<Vec<WaveletScore>> {
    if library.is_empty() {
        return Err(Error::Config("empty wavelet library".into()));
    }
    if segments.is_empty() {
        return Err(Error::Data("no training segments to score wavelets".into()));
    }
    let mut scores = library
        .iter()
        .map(|name| score_one(segments, name).map(|s| s.0))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionCriterion {
    EnergyEntropyRatio,
    ClassDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotherWaveletChoice {
    pub wavelet_name: String,
    pub criterion: SelectionCriterion,
    pub scores: Vec<WaveletScore>,
    /// |mean ratio(class 0) - mean ratio(class 1)| per wavelet, library order.
    pub class_distance: Vec<(String, f64)>,
}

/// Relative band within which the top two ratios count as tied.
pub const TIE_BAND: f64 = 0.05;

/// Picks the wavelet with the highest mean energy/entropy ratio; when the top
/// two are within [`TIE_BAND`], the wavelet whose per-class mean ratios are
/// furthest apart wins instead.
pub fn select_mother_wavelet(
    per_class: &BTreeMap<u8, Vec<&[f64]>>,
    library: &[&str],
) -> Result<MotherWaveletChoice> {
    for class in 0..2u8 {
        if per_class.get(&class).is_none_or(|s| s.is_empty()) {
            return Err(Error::EmptyClass(class));
        }
    }
    let all: Vec<&[f64]> = per_class.values().flatten().copied().collect();
    let scores = score_wavelets(&all, library)?;
    let class_distance = library
        .iter()
        .map(|name| {
            let m0 = score_one(&per_class[&0], name)?.0.ratio;
            let m1 = score_one(&per_class[&1], name)?.0.ratio;
            Ok((name.to_string(), (m0 - m1).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let top = &scores[0];
    let tied = scores
        .get(1)
        .is_some_and(|second| top.ratio - second.ratio <= TIE_BAND * top.ratio.abs());
    if !tied {
        return Ok(MotherWaveletChoice {
            wavelet_name: top.wavelet_name.clone(),
            criterion: SelectionCriterion::EnergyEntropyRatio,
            scores,
            class_distance,
        });
    }
    let mut best = &class_distance[0];
    for cand in &class_distance[1..] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(MotherWaveletChoice {
        wavelet_name: best.0.clone(),
        criterion: SelectionCriterion::ClassDistance,
        scores,
        class_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn library_is_complete_and_orthonormal() {
        for name in WAVELET_LIBRARY {
            let w = wavelet(name).unwrap();
            let norm: f64 = w.dec_lo.iter().map(|v| v * v).sum();
            let sum: f64 = w.dec_lo.iter().sum();
            assert!((norm - 1.0).abs() < 1e-10, "{name}");
            assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-10, "{name}");
        }
        assert!(matches!(wavelet("mexh"), Err(Error::UnknownWavelet(_))));
    }

    #[test]
    fn matches_reference_single_level_db2() {
        // Reference values from an independent implementation (PyWavelets,
        // mode "symmetric") for x = 0..10.
        let x: Vec<f64> = (0..10).map(|v| v as f64).collect();
        let d = dwt(&x, "db2", 1, 1.0).unwrap();
        let approx = [0.35355339, 0.89657547, 3.7250026, 6.55342972, 9.38185685, 12.37436867];
        let detail = [-0.612372436, 0.0, 0.0, 0.0, 0.0, 0.612372436];
        for (a, e) in d.approx_coeffs.iter().zip(approx) {
            assert!((a - e).abs() < 1e-7, "{a} vs {e}");
        }
        for (a, e) in d.detail_coeffs[0].iter().zip(detail) {
            assert!((a - e).abs() < 1e-7, "{a} vs {e}");
        }
    }

    #[test]
    fn haar_of_constant_has_zero_details() {
        let d = dwt(&[2.5; 64], "haar", 5, 1.0).unwrap();
        for level in &d.detail_coeffs {
            assert!(level.iter().all(|c| c.abs() < 1e-12));
        }
    }

    #[test]
    fn shifted_haar_atom_is_one_coefficient() {
        let mut x = vec![0.0; 32];
        x[6] = 1.0;
        x[7] = -1.0;
        let d = dwt(&x, "haar", 1, 1.0).unwrap();
        let nonzero: Vec<_> = d.detail_coeffs[0]
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > 1e-12)
            .collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].0, 3);
        assert!((nonzero[0].1.abs() - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(d.approx_coeffs.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn round_trip_odd_and_even_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for len in [37usize, 64, 101, 1024] {
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            for name in WAVELET_LIBRARY {
                let levels = max_levels(len).min(5);
                let d = dwt(&x, name, levels, 1.0).unwrap();
                let y = idwt(&d).unwrap();
                assert_eq!(y.len(), len);
                let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err <= 1e-8, "{name} len {len}: {err}");
            }
        }
    }

    #[test]
    fn level_bound() {
        assert_eq!(max_levels(1024), 9);
        assert_eq!(max_levels(4), 1);
        assert!(matches!(
            dwt(&[0.0; 16], "haar", 4, 1.0),
            Err(Error::TooManyLevels { max: 3, .. })
        ));
    }

    #[test]
    fn haar_center_frequency() {
        // closed support grid of 257 samples, dominant bin 1
        let fc = center_frequency("haar").unwrap();
        assert!((fc - 256.0 / 257.0).abs() < 1e-12);
        assert!((fc - 0.9961).abs() < 1e-4);
        let f4 = pseudo_frequency("haar", 4, 1000.0).unwrap();
        assert!((f4 - 62.3).abs() < 0.05, "{f4}");
    }

    #[test]
    fn pseudo_frequency_halves_per_level_and_scales_with_rate() {
        for name in WAVELET_LIBRARY {
            for level in 1..8 {
                let a = pseudo_frequency(name, level, 1000.0).unwrap();
                let b = pseudo_frequency(name, level + 1, 1000.0).unwrap();
                assert_eq!(b, a / 2.0);
                assert_eq!(pseudo_frequency(name, level, 2000.0).unwrap(), 2.0 * a);
            }
        }
    }

    #[test]
    fn haar_pulses_favor_haar() {
        let mut segs = Vec::new();
        for (scale, pos) in [(2usize, 8usize), (4, 16), (8, 32), (4, 40)] {
            let mut x = vec![0.0; 64];
            for i in 0..scale {
                x[pos + i] = 1.0;
                x[pos + scale + i] = -1.0;
            }
            segs.push(x);
        }
        let refs: Vec<&[f64]> = segs.iter().map(Vec::as_slice).collect();
        let scores = score_wavelets(&refs, &WAVELET_LIBRARY).unwrap();
        assert_eq!(scores[0].wavelet_name, "haar");
    }

    #[test]
    fn zero_segment_is_skipped() {
        let z = vec![0.0; 32];
        let s = score_wavelets(&[&z], &["haar"]).unwrap();
        assert_eq!(s[0].segments_scored, 0);
        assert_eq!(s[0].ratio, 0.0);
        assert!(score_wavelets(&[&z], &[]).is_err());
    }

    #[test]
    fn noise_scores_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let segs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..256).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = segs.iter().map(Vec::as_slice).collect();
        for s in score_wavelets(&refs, &WAVELET_LIBRARY).unwrap() {
            assert!(s.ratio.is_finite() && s.ratio > 0.0);
            assert!(s.entropy > 0.0);
        }
    }
}
