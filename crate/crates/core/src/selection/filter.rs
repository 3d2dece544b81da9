//! mRMR and rough-set MRMS rankers over discretized Train columns.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::mi::mutual_information;

/// Greedy order with the criterion value each pick won with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

fn weight(weights: Option<&[f64]>, f: usize) -> f64 {
    weights.map_or(1.0, |w| w[f])
}

/// Index of the largest finite score among unpicked features, lower index
/// on ties.
fn argmax(scores: &[f64], picked: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (f, &s) in scores.iter().enumerate() {
        if picked[f] {
            continue;
        }
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(f);
        }
    }
    best
}

/// Minimum-redundancy maximum-relevance order of the first `m` features.
/// `x[f]` is feature `f` on the Train rows; `weights` scale relevance.
pub fn mrmr_rank(x: &[Vec<u32>], y: &[u32], m: usize, weights: Option<&[f64]>) -> Ranking {
    let n = x.len();
    let relevance: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(f, col)| weight(weights, f) * mutual_information(col, y))
        .collect();
    let mut redundancy = vec![0.0; n];
    let mut picked = vec![false; n];
    let mut order = Vec::new();
    let mut scores = Vec::new();
    let mut criterion = relevance.clone();
    while order.len() < m.min(n) {
        let Some(f) = argmax(&criterion, &picked) else { break };
        picked[f] = true;
        order.push(f);
        scores.push(criterion[f]);
        let size = order.len() as f64;
        for g in 0..n {
            if !picked[g] {
                redundancy[g] += mutual_information(&x[g], &x[f]);
                criterion[g] = relevance[g] - redundancy[g] / size;
            }
        }
    }
    Ranking { order, scores }
}

/// Rough-set dependency of `y` on the joint values of `columns`: the
/// fraction of rows whose value tuple occurs with a single class.
pub fn dependency(columns: &[&[u32]], y: &[u32]) -> f64 {
    let n = y.len();
    if n == 0 {
        return 0.0;
    }
    let mut block: Vec<u32> = vec![0; n];
    for col in columns {
        let mut ids: HashMap<(u32, u32), u32> = HashMap::new();
        for (b, &v) in block.iter_mut().zip(col.iter()) {
            let next = ids.len() as u32;
            *b = *ids.entry((*b, v)).or_insert(next);
        }
    }
    // per block: first label seen and whether all labels agree
    let mut class: HashMap<u32, (u32, bool, usize)> = HashMap::new();
    for (&b, &label) in block.iter().zip(y) {
        let e = class.entry(b).or_insert((label, true, 0));
        e.1 &= e.0 == label;
        e.2 += 1;
    }
    let positive: usize = class.values().filter(|e| e.1).map(|e| e.2).sum();
    positive as f64 / n as f64
}

/// Maximum-relevance maximum-significance order of the first `m` features,
/// with relevance the single-feature dependency and significance
/// `gamma({f, s}) - gamma({s})` averaged over the picked set.
pub fn mrms_rank(x: &[Vec<u32>], y: &[u32], m: usize, weights: Option<&[f64]>) -> Ranking {
    let n = x.len();
    let gamma: Vec<f64> = x.iter().map(|c| dependency(&[c], y)).collect();
    let relevance: Vec<f64> = gamma.iter().enumerate().map(|(f, g)| weight(weights, f) * g).collect();
    let mut significance = vec![0.0; n];
    let mut picked = vec![false; n];
    let mut order = Vec::new();
    let mut scores = Vec::new();
    let mut criterion = relevance.clone();
    while order.len() < m.min(n) {
        let Some(f) = argmax(&criterion, &picked) else { break };
        picked[f] = true;
        order.push(f);
        scores.push(criterion[f]);
        let size = order.len() as f64;
        for g in 0..n {
            if !picked[g] {
                significance[g] += dependency(&[&x[g], &x[f]], y) - gamma[f];
                criterion[g] = relevance[g] + significance[g] / size;
            }
        }
    }
    Ranking { order, scores }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(n_features: usize, n: usize, seed: u64) -> (Vec<Vec<u32>>, Vec<u32>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let x = (0..n_features)
            .map(|_| {
                let card = rng.random_range(2..5);
                let p_copy = rng.random_range(0.0..0.6);
                y.iter()
                    .map(|&l| if rng.random_bool(p_copy) { l } else { rng.random_range(0..card) })
                    .collect()
            })
            .collect();
        (x, y)
    }

    /// Contingency-table mutual information, written independently of the
    /// library estimator.
    fn mi_oracle(a: &[u32], b: &[u32]) -> f64 {
        let n = a.len() as f64;
        let mut joint: HashMap<(u32, u32), f64> = HashMap::new();
        let mut pa: HashMap<u32, f64> = HashMap::new();
        let mut pb: HashMap<u32, f64> = HashMap::new();
        for (&u, &v) in a.iter().zip(b) {
            *joint.entry((u, v)).or_default() += 1.0 / n;
            *pa.entry(u).or_default() += 1.0 / n;
            *pb.entry(v).or_default() += 1.0 / n;
        }
        joint.iter().map(|(&(u, v), &p)| p * (p / (pa[&u] * pb[&v])).ln()).sum()
    }

    /// Re-evaluates the full criterion for every candidate at every step.
    fn mrmr_oracle(x: &[Vec<u32>], y: &[u32], m: usize) -> Vec<usize> {
        let mut chosen: Vec<usize> = Vec::new();
        while chosen.len() < m {
            let mut best: Option<(usize, f64)> = None;
            for f in (0..x.len()).filter(|f| !chosen.contains(f)) {
                let rel = mi_oracle(&x[f], y);
                let score = if chosen.is_empty() {
                    rel
                } else {
                    rel - chosen.iter().map(|&s| mi_oracle(&x[f], &x[s])).sum::<f64>() / chosen.len() as f64
                };
                if best.is_none_or(|b| score > b.1 + 1e-12) {
                    best = Some((f, score));
                }
            }
            chosen.push(best.unwrap().0);
        }
        chosen
    }

    /// Positive region by pairwise comparison of value tuples.
    fn gamma_oracle(cols: &[&[u32]], y: &[u32]) -> f64 {
        let n = y.len();
        let same = |i: usize, j: usize| cols.iter().all(|c| c[i] == c[j]);
        let positive = (0..n).filter(|&i| (0..n).all(|j| !same(i, j) || y[i] == y[j])).count();
        positive as f64 / n as f64
    }

    #[test]
    fn exact_copy_of_label_ranks_first() {
        let (mut x, y) = random_table(5, 60, 1);
        x[3] = y.clone();
        assert_eq!(mrmr_rank(&x, &y, 3, None).order[0], 3);
        assert_eq!(mrms_rank(&x, &y, 3, None).order[0], 3);
    }

    #[test]
    fn duplicate_feature_is_not_picked_second() {
        let y: Vec<u32> = (0..40).map(|i| u32::from(i >= 20)).collect();
        let mut f1 = y.clone();
        for i in [0, 1, 20, 21] {
            f1[i] = 1 - f1[i];
        }
        // alternate within every (y, f1) cell: independent of both exactly
        let f3: Vec<u32> = (0..40).map(|i| (i % 2) as u32).collect();
        let x = vec![f1.clone(), f1.clone(), f3];
        let r = mrmr_rank(&x, &y, 3, None);
        assert_eq!(r.order[..2], [0, 2]);
        let dup = mutual_information(&f1, &y) - mutual_information(&f1, &f1);
        assert!(dup < 0.0);
        assert_eq!(r.scores[1], 0.0);
    }

    #[test]
    fn mrmr_matches_brute_force_oracle() {
        for seed in 0..10 {
            let (x, y) = random_table(8, 60, 100 + seed);
            assert_eq!(mrmr_rank(&x, &y, 8, None).order, mrmr_oracle(&x, &y, 8), "seed {seed}");
        }
    }

    #[test]
    fn unit_weights_are_neutral() {
        let (x, y) = random_table(8, 60, 7);
        let ones = vec![1.0; 8];
        assert_eq!(mrmr_rank(&x, &y, 8, None), mrmr_rank(&x, &y, 8, Some(&ones)));
        assert_eq!(mrms_rank(&x, &y, 8, None), mrms_rank(&x, &y, 8, Some(&ones)));
    }

    #[test]
    fn weight_scales_first_pick_score() {
        let (x, y) = random_table(6, 60, 9);
        let mut w = vec![1.0; 6];
        w[4] = 5.0;
        let plain = mrmr_rank(&x, &y, 6, None);
        let weighted = mrmr_rank(&x, &y, 6, Some(&w));
        let rel = mutual_information(&x[4], &y);
        assert_eq!(weighted.order[0], 4);
        assert!((weighted.scores[0] - 5.0 * rel).abs() < 1e-15);
        assert!(plain.scores[0] >= rel);
    }

    #[test]
    fn consistent_partition_has_full_dependency() {
        let y: Vec<u32> = (0..30).map(|i| u32::from(i % 3 == 0)).collect();
        let f: Vec<u32> = (0..30).map(|i| (i % 3) as u32).collect();
        assert_eq!(dependency(&[&f], &y), 1.0);
        let constant = vec![0u32; 30];
        assert_eq!(dependency(&[&constant], &y), 0.0);
        assert_eq!(dependency(&[&constant], &[1; 30]), 1.0);
        let (mut x, _) = random_table(4, 30, 3);
        // significance is never negative, so the constant can only tie
        x[3] = constant;
        x[2] = f;
        let r = mrms_rank(&x, &y, 4, None);
        assert_eq!(r.order[0], 2);
        assert_eq!(*r.order.last().unwrap(), 3);
        assert_eq!(*r.scores.last().unwrap(), 0.0);
    }

    #[test]
    fn dependency_matches_positive_region_enumeration() {
        for seed in 0..20 {
            let (x, y) = random_table(6, 50, 300 + seed);
            for a in 0..6 {
                assert_eq!(dependency(&[&x[a]], &y), gamma_oracle(&[&x[a]], &y));
                for b in a + 1..6 {
                    assert_eq!(dependency(&[&x[a], &x[b]], &y), gamma_oracle(&[&x[a], &x[b]], &y));
                }
            }
            let all: Vec<&[u32]> = x.iter().map(Vec::as_slice).collect();
            assert_eq!(dependency(&all, &y), gamma_oracle(&all, &y));
        }
    }

    #[test]
    fn rankings_are_deterministic() {
        let (x, y) = random_table(8, 60, 11);
        assert_eq!(mrmr_rank(&x, &y, 5, None), mrmr_rank(&x, &y, 5, None));
        assert_eq!(mrms_rank(&x, &y, 5, None), mrms_rank(&x, &y, 5, None));
    }
}
