//! Interpretation report over the recommended features.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::describe::{compress_across_windows, describe_group, Description, GROUP_STFT};
use super::harmonics::{match_harmonics, value_ranges, ClassRange, FundamentalFrequency, HarmonicMatch};
use crate::dataset::SignalDataset;
use crate::error::{Error, Result};
use crate::features::{replay_column, LocationKind, MappingTable, ProvenanceRecord};
use crate::partition::{FoldPlan, Role};
use crate::selection::{recommended_ids, RecommendationResult};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSettings {
    pub max_n: u32,
    pub tolerance: f64,
}

impl Default for HarmonicSettings {
    fn default() -> Self {
        HarmonicSettings {
            max_n: super::harmonics::DEFAULT_MAX_HARMONIC,
            tolerance: super::harmonics::DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanges {
    pub feature_id: usize,
    pub classes: Vec<ClassRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportItem {
    pub feature_ids: Vec<usize>,
    /// Windows merged into this item; empty for aggregated features.
    pub windows: Vec<usize>,
    pub in_fe1: bool,
    pub in_fe2: bool,
    pub description: Description,
    pub provenance: ProvenanceRecord,
    pub value_ranges: Vec<FeatureRanges>,
    /// Frequency used for matching, when the feature has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    pub harmonics: Vec<HarmonicMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub n_folds: usize,
    pub level_reached: u8,
    pub metric: String,
    pub fe1: Vec<usize>,
    pub fe2: Vec<usize>,
    pub fe1_eval_best: f64,
    pub fe2_eval_worst: f64,
    pub window_size_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationReport {
    pub schema_version: u32,
    pub run: RunSummary,
    /// Fold whose Train rows give the value ranges.
    pub range_fold: usize,
    pub items: Vec<ReportItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmonic_settings: Option<HarmonicSettings>,
    /// Fundamentals no recommended feature matched; absent without a
    /// fundamentals list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unmatched_fundamentals: Option<Vec<String>>,
}

/// Train-row values of `ids` for one fold, replayed from the signals.
pub fn train_values(
    dataset: &SignalDataset,
    plan: &FoldPlan,
    fold: usize,
    table: &MappingTable,
    ids: &[usize],
) -> Result<(BTreeMap<usize, Vec<f64>>, Vec<u8>)> {
    let rows = plan.indices(fold, Role::Train);
    let labels = dataset.labels();
    let mut out = BTreeMap::new();
    for &id in ids {
        let col = replay_column(&table.record(id)?.definition, dataset, &table.context)?;
        out.insert(id, rows.iter().map(|&r| col[r]).collect());
    }
    Ok((out, rows.iter().map(|&r| labels[r]).collect()))
}

/// Matching frequency: bin centre or DWT pseudo-frequency.
fn located_hz(r: &ProvenanceRecord) -> Option<f64> {
    match r.location.kind {
        LocationKind::Bin | LocationKind::DwtLevel => r.location.frequency_hz,
        _ => None,
    }
}

/// Builds the report. `values` holds Train values per feature id for
/// `range_fold`, aligned with `labels`.
pub fn build_report(
    result: &RecommendationResult,
    table: &MappingTable,
    values: &BTreeMap<usize, Vec<f64>>,
    labels: &[u8],
    range_fold: usize,
    fundamentals: Option<&[FundamentalFrequency]>,
    settings: HarmonicSettings,
) -> Result<InterpretationReport> {
    let ids = recommended_ids(result);
    let groups = compress_across_windows(&ids, table)?;
    let mut items = Vec::with_capacity(groups.len());
    let mut matched: Vec<&str> = Vec::new();
    for g in &groups {
        let first = table.record(g.feature_ids[0])?;
        let mut description = describe_group(g, table)?;
        let frequency_hz = located_hz(first);
        let harmonics = match (fundamentals, frequency_hz) {
            (Some(f), Some(hz)) => match_harmonics(hz, f, settings.max_n, settings.tolerance)?,
            _ => Vec::new(),
        };
        if !harmonics.is_empty() {
            if let Some(d) = description.detail.as_mut() {
                if let Some(rest) = d.strip_prefix("DWT Frequency: ") {
                    *d = format!("DWT Frequency: (harmonic) {rest}");
                }
            }
        }
        if let Some(f) = fundamentals {
            for h in &harmonics {
                if let Some(x) = f.iter().find(|x| x.name == h.fundamental) {
                    matched.push(&x.name);
                }
            }
        }
        let value_ranges = g
            .feature_ids
            .iter()
            .map(|&id| {
                let v = values
                    .get(&id)
                    .ok_or_else(|| Error::Invariant(format!("no Train values for feature {id}")))?;
                Ok(FeatureRanges {
                    feature_id: id,
                    classes: value_ranges(v, labels)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        items.push(ReportItem {
            feature_ids: g.feature_ids.clone(),
            windows: g.windows.clone(),
            in_fe1: g.feature_ids.iter().any(|i| result.fe1.feature_ids.contains(i)),
            in_fe2: g.feature_ids.iter().any(|i| result.fe2.feature_ids.contains(i)),
            description,
            provenance: first.clone(),
            value_ranges,
            frequency_hz,
            harmonics,
        });
    }
    let unmatched_fundamentals = fundamentals.map(|f| {
        f.iter()
            .filter(|x| !matched.contains(&x.name.as_str()))
            .map(|x| x.name.clone())
            .collect()
    });
    Ok(InterpretationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run: RunSummary {
            seed: result.seed,
            n_folds: result.n_folds,
            level_reached: result.level_reached,
            metric: result.selection.metric.name().to_string(),
            fe1: result.fe1.feature_ids.clone(),
            fe2: result.fe2.feature_ids.clone(),
            fe1_eval_best: result.fe1.eval_best,
            fe2_eval_worst: result.fe2.eval_worst,
            window_size_s: table.context.unit().window_size_s,
        },
        range_fold,
        items,
        harmonic_settings: fundamentals.map(|_| settings),
        unmatched_fundamentals,
    })
}

fn ordinal(n: u32) -> String {
    let suffix = match (n % 10, n % 100) {
        (1, x) if x != 11 => "st",
        (2, x) if x != 12 => "nd",
        (3, x) if x != 13 => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn membership(item: &ReportItem) -> &'static str {
    match (item.in_fe1, item.in_fe2) {
        (true, true) => "Fe1, Fe2",
        (true, false) => "Fe1",
        _ => "Fe2",
    }
}

fn cell(d: &Description) -> String {
    match &d.detail {
        Some(detail) if d.group != GROUP_STFT => format!("{}<br>{}", d.text, detail),
        _ => d.text.clone(),
    }
}

impl InterpretationReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Invariant(format!("report serialization: {e}")))
    }

    /// Table-style rendering: STFT bins share one numbered row, every other
    /// item gets its own.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let r = &self.run;
        let _ = writeln!(s, "# Recommended features, window size = {} s\n", r.window_size_s);
        let _ = writeln!(
            s,
            "Level reached: {}. Folds: {}. Seed: {}. Fe1 best-fold {} = {:.4}; Fe2 worst-fold {} = {:.4}.\n",
            r.level_reached, r.n_folds, r.seed, r.metric, r.fe1_eval_best, r.metric, r.fe2_eval_worst
        );
        let _ = writeln!(s, "| Sl. | Group | Feature description | Set |");
        let _ = writeln!(s, "|---|---|---|---|");
        let stft: Vec<&ReportItem> = self.items.iter().filter(|i| i.description.group == GROUP_STFT).collect();
        let mut row = 0;
        if !stft.is_empty() {
            row += 1;
            let lines: Vec<String> = stft.iter().map(|i| cell(&i.description)).collect();
            let sets: Vec<&str> = stft.iter().map(|i| membership(i)).collect();
            let _ = writeln!(s, "| {row} | STFT | {} | {} |", lines.join("<br>"), sets.join("<br>"));
        }
        for item in self.items.iter().filter(|i| i.description.group != GROUP_STFT) {
            row += 1;
            let _ = writeln!(
                s,
                "| {row} | {} | {} | {} |",
                item.description.group,
                cell(&item.description),
                membership(item)
            );
        }
        let _ = writeln!(s, "\n## Class value ranges (Train rows of fold {})\n", self.range_fold);
        let _ = writeln!(s, "| Feature | Class | n | min | q1 | median | q3 | max |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
        for item in &self.items {
            for fr in &item.value_ranges {
                for c in &fr.classes {
                    let v = c.range;
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {:.6} | {:.6} | {:.6} | {:.6} | {:.6} |",
                        fr.feature_id, c.class, c.n, v.min, v.q1, v.median, v.q3, v.max
                    );
                }
            }
        }
        if let Some(h) = self.harmonic_settings {
            let _ = writeln!(
                s,
                "\n## Harmonic matches (tolerance {}, up to harmonic {})\n",
                h.tolerance, h.max_n
            );
            let mut any = false;
            for item in &self.items {
                for m in &item.harmonics {
                    any = true;
                    let _ = writeln!(
                        s,
                        "- {:.4} Hz ({}) is consistent with the {} harmonic of {} ({} Hz), relative deviation {:.5}",
                        m.feature_hz,
                        item.description.text,
                        ordinal(m.harmonic_n),
                        m.fundamental,
                        m.fundamental_hz,
                        m.relative_deviation
                    );
                }
            }
            if !any {
                let _ = writeln!(s, "- none");
            }
            if let Some(u) = &self.unmatched_fundamentals {
                let _ = writeln!(s, "\nFundamentals with no matching recommended feature: {}", if u.is_empty() {
                    "none".to_string()
                } else {
                    u.join(", ")
                });
            }
        }
        s
    }
}
