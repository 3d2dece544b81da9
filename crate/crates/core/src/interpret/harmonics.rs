//! Harmonic matching against machine fundamentals, and per-class value
//! ranges.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::five_number;

pub const DEFAULT_TOLERANCE: f64 = 0.025;
pub const DEFAULT_MAX_HARMONIC: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FundamentalFrequency {
    pub name: String,
    pub hz: f64,
}

pub fn validate_fundamentals(list: &[FundamentalFrequency]) -> Result<()> {
    let mut names = HashSet::new();
    for f in list {
        if !(f.hz.is_finite() && f.hz > 0.0) {
            return Err(Error::Config(format!("fundamental '{}' must have hz > 0, got {}", f.name, f.hz)));
        }
        if !names.insert(f.name.as_str()) {
            return Err(Error::Config(format!("duplicate fundamental name '{}'", f.name)));
        }
    }
    Ok(())
}

/// Reads a JSON list of `{"name", "hz"}` entries.
pub fn read_fundamentals(path: &Path) -> Result<Vec<FundamentalFrequency>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let list: Vec<FundamentalFrequency> = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    validate_fundamentals(&list)?;
    Ok(list)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMatch {
    pub feature_hz: f64,
    pub fundamental: String,
    pub fundamental_hz: f64,
    pub harmonic_n: u32,
    pub relative_deviation: f64,
}

/// Every `(fundamental, n <= max_n)` with `|hz - n f0| / (n f0) <= tolerance`,
/// by ascending deviation (then input order, then n).
pub fn match_harmonics(
    feature_hz: f64,
    fundamentals: &[FundamentalFrequency],
    max_n: u32,
    tolerance: f64,
) -> Result<Vec<HarmonicMatch>> {
    if !(tolerance > 0.0 && tolerance <= 0.1) {
        return Err(Error::Config(format!("harmonic tolerance must be in (0, 0.1], got {tolerance}")));
    }
    if max_n < 1 {
        return Err(Error::Config("max harmonic number must be at least 1".into()));
    }
    let mut out = Vec::new();
    for f in fundamentals {
        for n in 1..=max_n {
            let target = f64::from(n) * f.hz;
            let dev = (feature_hz - target).abs() / target;
            if dev <= tolerance {
                out.push(HarmonicMatch {
                    feature_hz,
                    fundamental: f.name.clone(),
                    fundamental_hz: f.hz,
                    harmonic_n: n,
                    relative_deviation: dev,
                });
            }
        }
    }
    // stable sort keeps input order among equal deviations
    out.sort_by(|a, b| a.relative_deviation.total_cmp(&b.relative_deviation));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl From<[f64; 5]> for FiveNumber {
    fn from(v: [f64; 5]) -> Self {
        FiveNumber {
            min: v[0],
            q1: v[1],
            median: v[2],
            q3: v[3],
            max: v[4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRange {
    pub class: u8,
    pub n: usize,
    pub range: FiveNumber,
}

/// Five-number summary of `values` per class (0, then 1).
pub fn value_ranges(values: &[f64], labels: &[u8]) -> Result<Vec<ClassRange>> {
    if values.len() != labels.len() {
        return Err(Error::Invariant(format!("{} values for {} labels", values.len(), labels.len())));
    }
    (0..=1u8)
        .map(|class| {
            let v: Vec<f64> = values.iter().zip(labels).filter(|(_, &l)| l == class).map(|(&v, _)| v).collect();
            if v.is_empty() {
                return Err(Error::EmptyClass(class));
            }
            Ok(ClassRange {
                class,
                n: v.len(),
                range: five_number(&v).into(),
            })
        })
        .collect()
}
