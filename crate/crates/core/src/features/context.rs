use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{SignalDataset, WindowPlan};
use crate::error::{Error, Result};
use crate::transforms::{max_levels, next_pow2, Taper, WAVELET_LIBRARY};

use super::defs::WindowScale;

fn default_window() -> WindowPlan {
    WindowPlan::new(0.5, 0.0)
}
fn default_stride() -> usize {
    4
}
fn default_levels() -> usize {
    5
}
fn default_top_r() -> usize {
    24
}
fn default_library() -> Vec<String> {
    WAVELET_LIBRARY.iter().map(|s| s.to_string()).collect()
}

/// Feature-generation settings shared by every fold and level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    #[serde(default = "default_window")]
    pub window: WindowPlan,
    /// Defaults to the next power of two at or above the window length.
    #[serde(default)]
    pub n_fft: Option<usize>,
    #[serde(default)]
    pub taper: Taper,
    #[serde(default = "default_stride")]
    pub bin_stride: usize,
    #[serde(default = "default_levels")]
    pub dwt_levels: usize,
    #[serde(default = "default_library")]
    pub wavelet_library: Vec<String>,
    /// Emit DWT features for every library wavelet instead of the selected one.
    #[serde(default)]
    pub wavelet_sweep: bool,
    /// Add STFT bins from windows half and twice the configured size.
    #[serde(default)]
    pub stft_window_sweep: bool,
    /// Level-2 features entering the level-3 ratio pairs.
    #[serde(default = "default_top_r")]
    pub ratio_top_r: usize,
    /// Also emit min/max/std over windows next to the mean.
    #[serde(default)]
    pub multi_agg: bool,
    /// Keep one feature per window instead of aggregating.
    #[serde(default)]
    pub keep_per_window: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window: default_window(),
            n_fft: None,
            taper: Taper::default(),
            bin_stride: default_stride(),
            dwt_levels: default_levels(),
            wavelet_library: default_library(),
            wavelet_sweep: false,
            stft_window_sweep: false,
            ratio_top_r: default_top_r(),
            multi_agg: false,
            keep_per_window: false,
        }
    }
}

/// Window geometry for one STFT window scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalePlan {
    pub window_size_s: f64,
    pub window_len: usize,
    pub hop: usize,
    pub n_windows: usize,
    pub n_fft: usize,
}

/// [`FeatureConfig`] resolved against a dataset: everything needed to replay
/// a feature on a raw instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedContext {
    pub rate: f64,
    pub overlap: f64,
    pub taper: Taper,
    pub bin_stride: usize,
    pub dwt_levels: usize,
    pub scales: BTreeMap<WindowScale, ScalePlan>,
}

impl ResolvedContext {
    pub fn resolve(cfg: &FeatureConfig, dataset: &SignalDataset) -> Result<Self> {
        let rate = dataset.sampling_rate_hz;
        let min_len = dataset.min_len();
        if cfg.bin_stride == 0 {
            return Err(Error::Config("bin_stride must be at least 1".into()));
        }
        let unit = scale_plan(&cfg.window, 1.0, rate, min_len, cfg.n_fft)?;
        let max = max_levels(unit.window_len);
        if cfg.dwt_levels == 0 || cfg.dwt_levels > max {
            return Err(Error::TooManyLevels {
                levels: cfg.dwt_levels,
                max,
                len: unit.window_len,
            });
        }
        let mut scales = BTreeMap::new();
        scales.insert(WindowScale::Unit, unit);
        if cfg.stft_window_sweep {
            for scale in [WindowScale::Half, WindowScale::Double] {
                match scale_plan(&cfg.window, scale.factor(), rate, min_len, None) {
                    Ok(p) => {
                        scales.insert(scale, p);
                    }
                    Err(e) => log::warn!("skipping STFT window scale {scale:?}: {e}"),
                }
            }
        }
        Ok(ResolvedContext {
            rate,
            overlap: cfg.window.overlap_fraction,
            taper: cfg.taper,
            bin_stride: cfg.bin_stride,
            dwt_levels: cfg.dwt_levels,
            scales,
        })
    }

    pub fn plan(&self, scale: WindowScale) -> Result<&ScalePlan> {
        self.scales
            .get(&scale)
            .ok_or_else(|| Error::Config(format!("window scale {scale:?} not in this run")))
    }

    pub fn unit(&self) -> &ScalePlan {
        &self.scales[&WindowScale::Unit]
    }

    pub fn n_windows(&self) -> usize {
        self.unit().n_windows
    }
}

fn scale_plan(
    base: &WindowPlan,
    factor: f64,
    rate: f64,
    min_len: usize,
    n_fft: Option<usize>,
) -> Result<ScalePlan> {
    let plan = WindowPlan::new(base.window_size_s * factor, base.overlap_fraction);
    let window_len = plan.window_length(rate)?;
    let hop = plan.hop(rate)?;
    let n_windows = plan.window_count(min_len, rate)?;
    let n_fft = n_fft.unwrap_or_else(|| next_pow2(window_len));
    if n_fft < window_len {
        return Err(Error::Config(format!(
            "n_fft {n_fft} is shorter than the {window_len}-sample window"
        )));
    }
    Ok(ScalePlan {
        window_size_s: plan.window_size_s,
        window_len,
        hop,
        n_windows,
        n_fft,
    })
}
