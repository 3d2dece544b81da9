//! Labeled 1-D signal datasets: loading, validation, windowing and synthesis.
//!
//! The canonical on-disk layout is a wide CSV (`label,s0,s1,...` per row) with
//! a `<stem>.meta.json` sidecar carrying the sampling rate. Long signals can
//! instead be listed in a manifest (`[{"path", "label"}, ...]`) pointing at
//! single-column CSV files; the same sidecar rule applies to the manifest.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SignalInstance {
    pub instance_id: u64,
    pub label: u8,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalDataset {
    pub name: String,
    pub sampling_rate_hz: f64,
    pub instances: Vec<SignalInstance>,
}

impl SignalDataset {
    /// Validates and wraps a set of instances.
    pub fn new(
        name: impl Into<String>,
        sampling_rate_hz: f64,
        instances: Vec<SignalInstance>,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(Error::Data(format!(
                "sampling rate must be positive, got {sampling_rate_hz}"
            )));
        }
        let mut ids = HashSet::with_capacity(instances.len());
        for inst in &instances {
            if !ids.insert(inst.instance_id) {
                return Err(Error::Data(format!(
                    "duplicate instance id {}",
                    inst.instance_id
                )));
            }
            if inst.label > 1 {
                return Err(Error::NonBinaryLabel {
                    label: inst.label.to_string(),
                });
            }
            if inst.samples.len() < 2 {
                return Err(Error::Data(format!(
                    "instance {} has {} samples, at least 2 required",
                    inst.instance_id,
                    inst.samples.len()
                )));
            }
            if inst.samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "instance {} contains non-finite samples",
                    inst.instance_id
                )));
            }
        }
        let ds = SignalDataset {
            name: name.into(),
            sampling_rate_hz,
            instances,
        };
        for class in 0..2u8 {
            if ds.class_count(class) == 0 {
                return Err(Error::EmptyClass(class));
            }
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn class_count(&self, class: u8) -> usize {
        self.instances.iter().filter(|i| i.label == class).count()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn min_len(&self) -> usize {
        self.instances
            .iter()
            .map(|i| i.samples.len())
            .min()
            .unwrap_or(0)
    }

    /// Position of an instance id in `instances`.
    pub fn index_of(&self, instance_id: u64) -> Option<usize> {
        self.instances
            .iter()
            .position(|i| i.instance_id == instance_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_size_s: f64,
    #[serde(default)]
    pub overlap_fraction: f64,
}

impl WindowPlan {
    pub fn new(window_size_s: f64, overlap_fraction: f64) -> Self {
        WindowPlan {
            window_size_s,
            overlap_fraction,
        }
    }

    /// Window length in samples, `floor(window_size_s * rate)`.
    pub fn window_length(&self, rate: f64) -> Result<usize> {
        if !(self.window_size_s.is_finite() && self.window_size_s > 0.0) {
            return Err(Error::Config(format!(
                "window size must be positive, got {}",
                self.window_size_s
            )));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::Config(format!(
                "overlap must lie in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        // Guard against 0.5 s * 1000 Hz evaluating to 499.999...
        let len = (self.window_size_s * rate + 1e-9).floor() as usize;
        if len < 4 {
            return Err(Error::Config(format!(
                "window of {len} samples is shorter than the 4-sample minimum"
            )));
        }
        Ok(len)
    }

    pub fn hop(&self, rate: f64) -> Result<usize> {
        let len = self.window_length(rate)?;
        let hop = (len as f64 * (1.0 - self.overlap_fraction)).floor() as usize;
        if hop < 1 {
            return Err(Error::Config("window hop rounds to zero samples".into()));
        }
        Ok(hop)
    }

    /// Number of complete windows for a signal of `len` samples.
    pub fn window_count(&self, len: usize, rate: f64) -> Result<usize> {
        let w = self.window_length(rate)?;
        let hop = self.hop(rate)?;
        if w > len {
            return Err(Error::WindowTooLong { window: w, len });
        }
        Ok((len - w) / hop + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowedSegment<'a> {
    pub instance_id: u64,
    pub window_index: usize,
    pub start: usize,
    pub samples: &'a [f64],
}

/// Splits an instance into consecutive full windows; a trailing partial
/// window is dropped.
pub fn window_instance<'a>(
    instance: &'a SignalInstance,
    plan: &WindowPlan,
    rate: f64,
) -> Result<Vec<WindowedSegment<'a>>> {
    let w = plan.window_length(rate)?;
    let hop = plan.hop(rate)?;
    let count = plan.window_count(instance.samples.len(), rate)?;
    Ok((0..count)
        .map(|k| {
            let start = k * hop;
            WindowedSegment {
                instance_id: instance.instance_id,
                window_index: k,
                start,
                samples: &instance.samples[start..start + w],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    WideCsv,
    Manifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarMeta {
    pub sampling_rate_hz: f64,
    #[serde(default)]
    pub name: String,
}

/// A row skipped during loading because it held missing or non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedRow {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: SignalDataset,
    pub dropped: Vec<DroppedRow>,
}

/// `data/foo.csv` -> `data/foo.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

fn read_sidecar(path: &Path) -> Result<SidecarMeta> {
    let meta_path = sidecar_path(path);
    if !meta_path.exists() {
        return Err(Error::MissingSidecar(meta_path));
    }
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(&meta_path, e))
}

fn parse_label(field: &str) -> Result<u8> {
    match field.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => match other.parse::<f64>() {
            Ok(v) if v == 0.0 => Ok(0),
            Ok(v) if v == 1.0 => Ok(1),
            _ => Err(Error::NonBinaryLabel {
                label: other.to_string(),
            }),
        },
    }
}

enum ParsedValues {
    Ok(Vec<f64>),
    Missing(String),
}

fn parse_values<'a>(fields: impl Iterator<Item = &'a str>, row: usize) -> Result<ParsedValues> {
    let mut out = Vec::new();
    for (col, f) in fields.enumerate() {
        let f = f.trim();
        if f.is_empty() {
            return Ok(ParsedValues::Missing(format!("empty value in column {}", col + 1)));
        }
        let v: f64 = f.parse().map_err(|_| Error::MalformedRow {
            row,
            reason: format!("cannot parse '{f}' as a number"),
        })?;
        if !v.is_finite() {
            return Ok(ParsedValues::Missing(format!(
                "non-finite value '{f}' in column {}",
                col + 1
            )));
        }
        out.push(v);
    }
    Ok(ParsedValues::Ok(out))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file))
}

fn load_wide_csv(path: &Path) -> Result<LoadedDataset> {
    let meta = read_sidecar(path)?;
    let mut reader = csv_reader(path)?;
    let mut instances = Vec::new();
    let mut dropped = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        if rec.len() < 3 {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected a label and at least 2 samples, got {} fields", rec.len()),
            });
        }
        let label = parse_label(&rec[0])?;
        match parse_values(rec.iter().skip(1), row)? {
            ParsedValues::Ok(samples) => instances.push(SignalInstance {
                instance_id: row as u64,
                label,
                samples,
            }),
            ParsedValues::Missing(reason) => {
                log::warn!("{}: dropping row {row}: {reason}", path.display());
                dropped.push(DroppedRow { row, reason });
            }
        }
    }
    let name = if meta.name.is_empty() {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    } else {
        meta.name
    };
    let dataset = SignalDataset::new(name, meta.sampling_rate_hz, instances)?;
    Ok(LoadedDataset { dataset, dropped })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: u8,
}

fn load_manifest(path: &Path) -> Result<LoadedDataset> {
    let meta = read_sidecar(path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut instances = Vec::new();
    let mut dropped = Vec::new();
    for (row, entry) in entries.iter().enumerate() {
        if entry.label > 1 {
            return Err(Error::NonBinaryLabel {
                label: entry.label.to_string(),
            });
        }
        let file = base.join(&entry.path);
        let mut reader = csv_reader(&file)?;
        let mut fields = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::MalformedRow {
                row,
                reason: format!("{}: {e}", file.display()),
            })?;
            if rec.len() != 1 {
                return Err(Error::MalformedRow {
                    row,
                    reason: format!("{}: expected a single column", file.display()),
                });
            }
            fields.push(rec[0].to_string());
        }
        match parse_values(fields.iter().map(String::as_str), row)? {
            ParsedValues::Ok(samples) => instances.push(SignalInstance {
                instance_id: row as u64,
                label: entry.label,
                samples,
            }),
            ParsedValues::Missing(reason) => {
                log::warn!("{}: dropping instance {row}: {reason}", file.display());
                dropped.push(DroppedRow { row, reason });
            }
        }
    }
    let dataset = SignalDataset::new(meta.name, meta.sampling_rate_hz, instances)?;
    Ok(LoadedDataset { dataset, dropped })
}

/// Loads and validates a dataset. Rows holding missing or non-finite values
/// are dropped and reported in [`LoadedDataset::dropped`].
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<LoadedDataset> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    match format {
        DatasetFormat::WideCsv => load_wide_csv(path),
        DatasetFormat::Manifest => load_manifest(path),
    }
}

/// Writes `dataset` as a wide CSV plus its `.meta.json` sidecar. Samples are
/// written in shortest round-trip form, so loading reproduces them exactly.
pub fn write_dataset(dataset: &SignalDataset, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut out = String::new();
    for inst in &dataset.instances {
        out.push_str(&inst.label.to_string());
        for v in &inst.samples {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let meta = SidecarMeta {
        sampling_rate_hz: dataset.sampling_rate_hz,
        name: dataset.name.clone(),
    };
    let meta_path = sidecar_path(path);
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::json(&meta_path, e))?;
    fs::write(&meta_path, text + "\n").map_err(|e| Error::io(&meta_path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub freq_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSignal {
    pub tones: Vec<Tone>,
    pub noise_sigma: f64,
}

/// Recipe for a synthetic two-class tone dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    #[serde(default = "default_synth_name")]
    pub name: String,
    pub sampling_rate_hz: f64,
    pub n_samples: usize,
    pub instances_per_class: usize,
    pub class0: ClassSignal,
    pub class1: ClassSignal,
    /// Draw a uniform random phase per tone and instance.
    #[serde(default = "default_true")]
    pub random_phase: bool,
}

fn default_synth_name() -> String {
    "synthetic".into()
}

fn default_true() -> bool {
    true
}

impl SynthesisSpec {
    /// Two classes of single tones at `f0` and `f1` Hz with Gaussian noise.
    pub fn two_tone(f0: f64, f1: f64, sigma: f64, per_class: usize, n_samples: usize, rate: f64) -> Self {
        let class = |f| ClassSignal {
            tones: vec![Tone {
                freq_hz: f,
                amplitude: 1.0,
            }],
            noise_sigma: sigma,
        };
        SynthesisSpec {
            name: format!("tones-{f0}-vs-{f1}"),
            sampling_rate_hz: rate,
            n_samples,
            instances_per_class: per_class,
            class0: class(f0),
            class1: class(f1),
            random_phase: true,
        }
    }
}

/// Generates a deterministic dataset; instances alternate class 0, class 1.
pub fn synthesize_dataset(spec: &SynthesisSpec, seed: u64) -> Result<SignalDataset> {
    let rate = spec.sampling_rate_hz;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Config(format!("sampling rate must be positive, got {rate}")));
    }
    let nyquist = rate / 2.0;
    for class in [&spec.class0, &spec.class1] {
        if !(class.noise_sigma >= 0.0 && class.noise_sigma.is_finite()) {
            return Err(Error::Config("noise sigma must be finite and non-negative".into()));
        }
        for tone in &class.tones {
            if !(tone.freq_hz >= 0.0) || tone.freq_hz >= nyquist {
                return Err(Error::AboveNyquist {
                    freq_hz: tone.freq_hz,
                    nyquist_hz: nyquist,
                });
            }
        }
    }
    if spec.instances_per_class == 0 {
        return Err(Error::Config("instances_per_class must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(2 * spec.instances_per_class);
    for i in 0..spec.instances_per_class {
        for (label, class) in [(0u8, &spec.class0), (1u8, &spec.class1)] {
            let phases: Vec<f64> = class
                .tones
                .iter()
                .map(|_| {
                    if spec.random_phase {
                        rng.random_range(0.0..2.0 * PI)
                    } else {
                        0.0
                    }
                })
                .collect();
            let noise = Normal::new(0.0, class.noise_sigma)
                .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;
            let samples = (0..spec.n_samples)
                .map(|n| {
                    let t = n as f64 / rate;
                    let tone: f64 = class
                        .tones
                        .iter()
                        .zip(&phases)
                        .map(|(tn, ph)| tn.amplitude * (2.0 * PI * tn.freq_hz * t + ph).sin())
                        .sum();
                    let eps = if class.noise_sigma > 0.0 {
                        noise.sample(&mut rng)
                    } else {
                        0.0
                    };
                    tone + eps
                })
                .collect();
            instances.push(SignalInstance {
                instance_id: (2 * i + label as usize) as u64,
                label,
                samples,
            });
        }
    }
    SignalDataset::new(spec.name.clone(), rate, instances)
}
