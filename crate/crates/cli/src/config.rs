//! The run-config file and its command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use featrec::dataset::DatasetFormat;
use featrec::features::FeatureConfig;
use featrec::models::Metric;
use featrec::selection::SelectionConfig;
use featrec::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}
fn wide_csv() -> DatasetFormat {
    DatasetFormat::WideCsv
}
fn default_components() -> Vec<usize> {
    vec![1, 2, 4]
}
fn default_out() -> PathBuf {
    PathBuf::from("runs/latest")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub dataset: PathBuf,
    #[serde(default = "wide_csv")]
    pub format: DatasetFormat,
    /// Chosen from the data when absent.
    #[serde(default)]
    pub n_folds: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    /// Component counts tried by `baseline-pca`.
    #[serde(default = "default_components")]
    pub pca_components: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fundamentals: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

/// Flag values that replace config fields one for one.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tau: Option<f64>,
    pub k: Option<usize>,
    pub window_size_s: Option<f64>,
    pub metric: Option<Metric>,
    pub out: Option<PathBuf>,
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    fs::canonicalize(&joined).unwrap_or(joined)
}

fn require(label: &str, p: &Path) -> Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("{label} '{}' does not exist", p.display())))
    }
}

impl RunConfig {
    /// Reads a config; relative paths are taken from the config's directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let base = fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
        cfg.dataset = absolute(&base, &cfg.dataset);
        cfg.fundamentals = cfg.fundamentals.map(|p| absolute(&base, &p));
        cfg.weights = cfg.weights.map(|p| absolute(&base, &p));
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.tau {
            self.selection.tau = t;
        }
        if let Some(k) = o.k {
            self.selection.k = k;
        }
        if let Some(w) = o.window_size_s {
            self.features.window.window_size_s = w;
        }
        if let Some(m) = o.metric {
            self.selection.metric = m;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported run-config schema_version {}",
                self.schema_version
            )));
        }
        require("dataset", &self.dataset)?;
        if let Some(p) = &self.fundamentals {
            require("fundamentals file", p)?;
        }
        if let Some(p) = &self.weights {
            require("weights file", p)?;
        }
        if self.n_folds.is_some_and(|n| n < 2) {
            return Err(Error::Config("n_folds must be at least 2".into()));
        }
        if self.pca_components.is_empty() || self.pca_components.contains(&0) {
            return Err(Error::Config("pca_components must list positive counts".into()));
        }
        self.selection.validate()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invariant(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}
