//! Expert relevance weights keyed by provenance predicates.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Domain, FeatureConfig, ProvenanceRecord, TransformKind};
use crate::selection::SelectionConfig;

pub const MAX_WEIGHT: f64 = 10.0;

/// A conjunction over provenance fields; absent fields match anything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
}

fn normalize(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

impl Selector {
    pub fn validate(&self) -> Result<()> {
        if self.domain.is_none() && self.transform.is_none() && self.statistic.is_none() && self.level.is_none() {
            return Err(Error::Config("empty weight selector".into()));
        }
        if let Some(d) = &self.domain {
            let d = normalize(d);
            if ![Domain::Time, Domain::Frequency, Domain::Wavelet].iter().any(|x| x.name() == d) {
                return Err(Error::Config(format!("unknown domain '{d}' in weight selector")));
            }
        }
        if let Some(t) = &self.transform {
            let t = normalize(t);
            if ![TransformKind::None, TransformKind::Stft, TransformKind::Dwt].iter().any(|x| x.name() == t) {
                return Err(Error::Config(format!("unknown transform '{t}' in weight selector")));
            }
        }
        if let Some(l) = self.level {
            if !(1..=3).contains(&l) {
                return Err(Error::Config(format!("selector level must be 1, 2 or 3, got {l}")));
            }
        }
        Ok(())
    }

    pub fn matches(&self, r: &ProvenanceRecord) -> bool {
        self.domain.as_deref().is_none_or(|d| normalize(d) == r.domain.name())
            && self.transform.as_deref().is_none_or(|t| normalize(t) == r.transform.name())
            && self.statistic.as_deref().is_none_or(|s| normalize(s) == r.statistic)
            && self.level.is_none_or(|l| l == r.level)
    }

    fn names(&self, domain: Domain, transform: TransformKind) -> bool {
        self.domain.as_deref().is_some_and(|d| normalize(d) == domain.name())
            || self.transform.as_deref().is_some_and(|t| normalize(t) == transform.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightEntry {
    pub selector: Selector,
    pub weight: f64,
}

/// Serialized as a bare list of entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpertWeights {
    pub entries: Vec<WeightEntry>,
}

impl ExpertWeights {
    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            e.selector.validate()?;
            if !(e.weight > 0.0 && e.weight <= MAX_WEIGHT) {
                return Err(Error::Config(format!(
                    "weight {} outside (0, {MAX_WEIGHT}]",
                    e.weight
                )));
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let w: ExpertWeights = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        w.validate()?;
        Ok(w)
    }

    pub fn is_neutral(&self) -> bool {
        self.entries.iter().all(|e| e.weight == 1.0)
    }

    /// Product of the weights of every matching entry.
    pub fn weight_of(&self, r: &ProvenanceRecord) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.selector.matches(r))
            .map(|e| e.weight)
            .product()
    }

    /// Selectors that match none of `records`.
    pub fn unmatched<'a>(&'a self, records: &[ProvenanceRecord]) -> Vec<&'a Selector> {
        self.entries
            .iter()
            .map(|e| &e.selector)
            .filter(|s| !records.iter().any(|r| s.matches(r)))
            .collect()
    }
}

/// Configuration for an expert-guided re-run.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedConfig {
    pub selection: SelectionConfig,
    pub features: FeatureConfig,
    pub unmatched: Vec<Selector>,
}

/// Attaches the non-neutral weights to the selection config and widens
/// feature generation for up-weighted families: STFT bins get the half and
/// double window sizes, DWT features every library wavelet. When `records`
/// are given, selectors matching none of them are reported and logged.
pub fn apply_expert_weights(
    weights: &ExpertWeights,
    selection: &SelectionConfig,
    features: &FeatureConfig,
    records: Option<&[ProvenanceRecord]>,
) -> Result<WeightedConfig> {
    weights.validate()?;
    let mut selection = selection.clone();
    let mut features = features.clone();
    let active: Vec<WeightEntry> = weights.entries.iter().filter(|e| e.weight != 1.0).cloned().collect();
    for e in &active {
        if e.weight > 1.0 {
            if e.selector.names(Domain::Frequency, TransformKind::Stft) {
                features.stft_window_sweep = true;
            }
            if e.selector.names(Domain::Wavelet, TransformKind::Dwt) {
                features.wavelet_sweep = true;
            }
        }
    }
    selection.expert_weights.entries.extend(active);
    let unmatched: Vec<Selector> = records
        .map(|r| weights.unmatched(r).into_iter().cloned().collect())
        .unwrap_or_default();
    if !unmatched.is_empty() {
        log::warn!(
            "weight selectors matching no feature: {}",
            unmatched
                .iter()
                .map(|s| serde_json::to_string(s).unwrap_or_default())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    Ok(WeightedConfig {
        selection,
        features,
        unmatched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize_dataset, SynthesisSpec};
    use crate::features::build_feature_pool;
    use crate::partition::{FoldPlan, Role};
    use crate::selection::{discretize, mrmr_rank, mutual_information};

    fn entry(selector: Selector, weight: f64) -> WeightEntry {
        WeightEntry { selector, weight }
    }

    fn stat(s: &str) -> Selector {
        Selector {
            statistic: Some(s.into()),
            ..Selector::default()
        }
    }

    fn records_and_columns() -> (Vec<ProvenanceRecord>, Vec<Vec<f64>>, Vec<u8>) {
        let spec = SynthesisSpec::two_tone(50.0, 80.0, 0.5, 12, 1024, 1000.0);
        let ds = synthesize_dataset(&spec, 3).unwrap();
        let plan = FoldPlan {
            n_folds: 1,
            seed: 0,
            instance_ids: ds.instances.iter().map(|i| i.instance_id).collect(),
            roles: vec![vec![Role::Train; ds.len()]],
            repairs: vec![],
        };
        let pool = build_feature_pool(&ds, &plan, 0, 2, &FeatureConfig::default()).unwrap();
        (pool.table.records, pool.matrix.columns, ds.labels())
    }

    #[test]
    fn neutral_weights_leave_configs_and_rankings_unchanged() {
        let w = ExpertWeights {
            entries: vec![entry(stat("kurtosis"), 1.0), entry(Selector { domain: Some("frequency".into()), ..Selector::default() }, 1.0)],
        };
        assert!(w.is_neutral());
        let sel = SelectionConfig::default();
        let feat = FeatureConfig::default();
        let out = apply_expert_weights(&w, &sel, &feat, None).unwrap();
        assert_eq!(out.selection, sel);
        assert_eq!(out.features, feat);

        let (records, columns, labels) = records_and_columns();
        let rows: Vec<usize> = (0..labels.len()).collect();
        let x: Vec<Vec<u32>> = columns.iter().map(|c| discretize(c, &rows, 5)).collect();
        let y: Vec<u32> = labels.iter().map(|&l| u32::from(l)).collect();
        let weights: Vec<f64> = records.iter().map(|r| w.weight_of(r)).collect();
        assert_eq!(mrmr_rank(&x, &y, 10, None), mrmr_rank(&x, &y, 10, Some(&weights)));
    }

    #[test]
    fn weight_multiplies_centroid_relevance() {
        let (records, columns, labels) = records_and_columns();
        let w = ExpertWeights {
            entries: vec![entry(stat("spectral-centroid"), 5.0)],
        };
        w.validate().unwrap();
        let weights: Vec<f64> = records.iter().map(|r| w.weight_of(r)).collect();
        let centroid: Vec<usize> = records
            .iter()
            .filter(|r| r.statistic == "spectral_centroid")
            .map(|r| r.feature_id)
            .collect();
        assert_eq!(centroid.len(), 1);
        for (f, &wt) in weights.iter().enumerate() {
            assert_eq!(wt, if centroid.contains(&f) { 5.0 } else { 1.0 });
        }
        // ranking restricted to the centroid: its first-pick score is the weighted relevance
        let rows: Vec<usize> = (0..labels.len()).collect();
        let y: Vec<u32> = labels.iter().map(|&l| u32::from(l)).collect();
        let c = vec![discretize(&columns[centroid[0]], &rows, 5)];
        let plain = mrmr_rank(&c, &y, 1, None);
        let weighted = mrmr_rank(&c, &y, 1, Some(&[5.0]));
        assert_eq!(plain.scores[0], mutual_information(&c[0], &y));
        assert!((weighted.scores[0] - 5.0 * plain.scores[0]).abs() <= 1e-15);
    }

    #[test]
    fn upweighted_families_widen_generation() {
        let sel = SelectionConfig::default();
        let feat = FeatureConfig::default();
        let w = ExpertWeights {
            entries: vec![
                entry(Selector { transform: Some("STFT".into()), ..Selector::default() }, 2.0),
                entry(Selector { domain: Some("wavelet".into()), level: Some(2), ..Selector::default() }, 3.0),
                entry(stat("kurtosis"), 0.5),
            ],
        };
        let out = apply_expert_weights(&w, &sel, &feat, None).unwrap();
        assert!(out.features.stft_window_sweep);
        assert!(out.features.wavelet_sweep);
        assert_eq!(out.selection.expert_weights.entries.len(), 3);
        let down = ExpertWeights {
            entries: vec![entry(Selector { transform: Some("dwt".into()), ..Selector::default() }, 0.5)],
        };
        let out = apply_expert_weights(&down, &sel, &feat, None).unwrap();
        assert!(!out.features.wavelet_sweep);
    }

    #[test]
    fn unmatched_and_malformed_selectors() {
        let (records, _, _) = records_and_columns();
        let w = ExpertWeights {
            entries: vec![entry(stat("kurtosis"), 2.0), entry(stat("no_such_statistic"), 2.0)],
        };
        let out = apply_expert_weights(&w, &SelectionConfig::default(), &FeatureConfig::default(), Some(&records)).unwrap();
        assert_eq!(out.unmatched, vec![stat("no_such_statistic")]);

        let bad = |json: &str| serde_json::from_str::<ExpertWeights>(json).map_err(|_| ()).and_then(|w| w.validate().map_err(|_| ()));
        assert!(bad(r#"[{"selector": {"domain": "frequency"}, "weight": 2.0}]"#).is_ok());
        assert!(bad(r#"[{"selector": {}, "weight": 2.0}]"#).is_err());
        assert!(bad(r#"[{"selector": {"domain": "audio"}, "weight": 2.0}]"#).is_err());
        assert!(bad(r#"[{"selector": {"level": 4}, "weight": 2.0}]"#).is_err());
        assert!(bad(r#"[{"selector": {"colour": "red"}, "weight": 2.0}]"#).is_err());
        assert!(bad(r#"[{"selector": {"level": 1}, "weight": 0.0}]"#).is_err());
        assert!(bad(r#"[{"selector": {"level": 1}, "weight": 10.5}]"#).is_err());
    }
}
