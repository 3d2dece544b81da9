//! Equal-frequency discretization and plug-in mutual information.

use serde::{Deserialize, Serialize};

use crate::stats::{quantile_sorted, sorted_copy};

/// Number of bins, explicit or derived from the Train size.
/// Serialized as the string `"AUTO"` or a plain integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinCount {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for BinCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BinCount::Auto => s.serialize_str("AUTO"),
            BinCount::Fixed(b) => s.serialize_u64(*b as u64),
        }
    }
}

impl<'de> Deserialize<'de> for BinCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Count(usize),
        }
        match Raw::deserialize(d)? {
            Raw::Name(n) if n.eq_ignore_ascii_case("auto") => Ok(BinCount::Auto),
            Raw::Name(n) => Err(serde::de::Error::custom(format!("bins must be AUTO or an integer, got '{n}'"))),
            Raw::Count(b) if b >= 2 => Ok(BinCount::Fixed(b)),
            Raw::Count(b) => Err(serde::de::Error::custom(format!("bins must be at least 2, got {b}"))),
        }
    }
}

impl BinCount {
    /// `Auto` resolves to `max(2, min(16, floor(sqrt(n_train / 5))))`.
    pub fn resolve(self, n_train: usize) -> usize {
        match self {
            BinCount::Fixed(b) => b.max(2),
            BinCount::Auto => ((n_train as f64 / 5.0).sqrt().floor() as usize).clamp(2, 16),
        }
    }
}

/// Bin edges fitted on Train values; a value maps to the number of edges
/// strictly below it, so ties always share a bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    pub edges: Vec<f64>,
}

impl Discretizer {
    pub fn fit(train: &[f64], bins: usize) -> Self {
        let sorted = sorted_copy(train);
        let mut edges: Vec<f64> = (1..bins.max(2))
            .map(|j| quantile_sorted(&sorted, j as f64 / bins.max(2) as f64))
            .collect();
        edges.dedup();
        Discretizer { edges }
    }

    pub fn bin(&self, v: f64) -> u32 {
        self.edges.partition_point(|&e| e < v) as u32
    }

    pub fn apply(&self, values: &[f64]) -> Vec<u32> {
        values.iter().map(|&v| self.bin(v)).collect()
    }
}

/// Discretizes `column` with edges fitted on the rows in `train`.
pub fn discretize(column: &[f64], train: &[usize], bins: usize) -> Vec<u32> {
    let fit: Vec<f64> = train.iter().map(|&i| column[i]).collect();
    Discretizer::fit(&fit, bins).apply(column)
}

fn counts(x: &[u32]) -> Vec<u64> {
    let n = x.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut c = vec![0u64; n];
    for &v in x {
        c[v as usize] += 1;
    }
    c
}

/// Plug-in entropy in nats.
pub fn entropy(x: &[u32]) -> f64 {
    let n = x.len() as f64;
    counts(x)
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let c = c as f64;
            c / n * (n / c).ln()
        })
        .sum()
}

/// Plug-in mutual information in nats; empty cells are skipped.
pub fn mutual_information(x: &[u32], y: &[u32]) -> f64 {
    assert_eq!(x.len(), y.len(), "mutual information needs equal lengths");
    if x.is_empty() {
        return 0.0;
    }
    let cx = counts(x);
    let cy = counts(y);
    let ny = cy.len();
    let mut joint = vec![0u64; cx.len() * ny];
    for (&a, &b) in x.iter().zip(y) {
        joint[a as usize * ny + b as usize] += 1;
    }
    let n = x.len() as f64;
    let mut mi = 0.0;
    for (cell, &c) in joint.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let (a, b) = (cell / ny, cell % ny);
        let c = c as f64;
        mi += c / n * ((c * n) / (cx[a] as f64 * cy[b] as f64)).ln();
    }
    mi
}
