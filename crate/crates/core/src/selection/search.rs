//! Exhaustive subset search with a greedy fallback, and the Fe1/Fe2 picks.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Eval metric of one subset on every fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    /// Ascending member ids.
    pub members: Vec<usize>,
    pub per_fold: Vec<f64>,
}

impl SubsetScore {
    pub fn best(&self) -> f64 {
        self.per_fold.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn worst(&self) -> f64 {
        self.per_fold.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.per_fold.iter().sum::<f64>() / self.per_fold.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub subsets: Vec<SubsetScore>,
    pub greedy_fallback: bool,
}

/// `2^k - 1`, saturating.
pub fn subset_count(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Scores every non-empty subset of `0..k` when `2^k - 1 <= c`; otherwise
/// grows one set greedily (by worst fold, then mean) and scores each
/// extension tried. `score` returns one value per fold.
pub fn search_subsets<F>(k: usize, c: u64, score: F) -> Result<SearchOutcome>
where
    F: Fn(&[usize]) -> Result<Vec<f64>> + Sync,
{
    if k == 0 {
        return Ok(SearchOutcome {
            subsets: Vec::new(),
            greedy_fallback: false,
        });
    }
    if subset_count(k) <= c {
        let subsets = (1..=subset_count(k))
            .into_par_iter()
            .map(|mask| {
                let members: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).collect();
                let per_fold = score(&members)?;
                Ok(SubsetScore { members, per_fold })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(SearchOutcome {
            subsets,
            greedy_fallback: false,
        });
    }
    log::info!(
        "2^{k} - 1 subsets exceed the evaluation budget {c}: greedy forward selection instead"
    );
    let mut chosen: Vec<usize> = Vec::new();
    let mut subsets = Vec::new();
    while chosen.len() < k {
        let tried = (0..k)
            .filter(|f| !chosen.contains(f))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|f| {
                let mut members = chosen.clone();
                members.push(f);
                members.sort_unstable();
                let per_fold = score(&members)?;
                Ok((f, SubsetScore { members, per_fold }))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best = 0;
        for (i, (_, s)) in tried.iter().enumerate() {
            let b = &tried[best].1;
            if s.worst() > b.worst() || (s.worst() == b.worst() && s.mean() > b.mean()) {
                best = i;
            }
        }
        chosen.push(tried[best].0);
        subsets.extend(tried.into_iter().map(|t| t.1));
    }
    Ok(SearchOutcome {
        subsets,
        greedy_fallback: true,
    })
}

fn tie_chain(a: &SubsetScore, b: &SubsetScore) -> Ordering {
    b.mean()
        .total_cmp(&a.mean())
        .then(a.members.len().cmp(&b.members.len()))
        .then_with(|| a.members.cmp(&b.members))
}

/// Highest single-fold metric; ties go to the higher mean, then the smaller
/// set, then the lexicographically smaller ids.
pub fn choose_fe1(subsets: &[SubsetScore]) -> Option<&SubsetScore> {
    subsets
        .iter()
        .min_by(|a, b| b.best().total_cmp(&a.best()).then_with(|| tie_chain(a, b)))
}

/// Highest worst-fold metric, with the same tie chain as [`choose_fe1`].
pub fn choose_fe2(subsets: &[SubsetScore]) -> Option<&SubsetScore> {
    subsets
        .iter()
        .min_by(|a, b| b.worst().total_cmp(&a.worst()).then_with(|| tie_chain(a, b)))
}
