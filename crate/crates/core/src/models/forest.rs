//! Bagged CART trees with Gini splits and sqrt(d) feature subsampling.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        /// Fraction of class-1 samples reaching the leaf.
        p1: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn p1(&self, x: &[f64]) -> f64 {
        match self {
            Node::Leaf { p1 } => *p1,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.p1(x)
                } else {
                    right.p1(x)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub max_features: usize,
}

fn gini(n0: usize, n1: usize) -> f64 {
    let n = (n0 + n1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (n0 as f64 / n, n1 as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: TreeParams,
    rng: ChaCha8Rng,
}

impl Builder<'_> {
    fn build(&mut self, idx: &mut [usize], depth: usize) -> Node {
        let n1 = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let n0 = idx.len() - n1;
        let leaf = Node::Leaf {
            p1: n1 as f64 / idx.len().max(1) as f64,
        };
        if n0 == 0 || n1 == 0 || self.params.max_depth.is_some_and(|d| depth >= d) {
            return leaf;
        }
        if idx.len() < 2 * self.params.min_leaf {
            return leaf;
        }
        let d = self.x[0].len();
        let mut features: Vec<usize> = sample(&mut self.rng, d, self.params.max_features.min(d)).into_vec();
        features.sort_unstable();
        let parent = gini(n0, n1);
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &features {
            idx.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let (mut l0, mut l1) = (0usize, 0usize);
            for k in 0..idx.len() - 1 {
                if self.y[idx[k]] == 1 {
                    l1 += 1;
                } else {
                    l0 += 1;
                }
                let (v, next) = (self.x[idx[k]][f], self.x[idx[k + 1]][f]);
                if v == next {
                    continue;
                }
                let nl = k + 1;
                let nr = idx.len() - nl;
                if nl < self.params.min_leaf || nr < self.params.min_leaf {
                    continue;
                }
                let (r0, r1) = (n0 - l0, n1 - l1);
                let impurity =
                    (nl as f64 * gini(l0, l1) + nr as f64 * gini(r0, r1)) / idx.len() as f64;
                if impurity < parent - 1e-12 && best.is_none_or(|b| impurity < b.0) {
                    best = Some((impurity, f, v + (next - v) / 2.0));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return leaf;
        };
        let mut left: Vec<usize> = idx.iter().copied().filter(|&i| self.x[i][feature] <= threshold).collect();
        let mut right: Vec<usize> = idx.iter().copied().filter(|&i| self.x[i][feature] > threshold).collect();
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.build(&mut left, depth + 1)),
            right: Box::new(self.build(&mut right, depth + 1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<Node>,
}

impl RandomForest {
    /// Trains `n_trees` trees, each on a bootstrap resample (a single tree
    /// sees the full sample).
    pub fn fit(x: &[Vec<f64>], y: &[u8], n_trees: usize, params: TreeParams, seed: u64) -> Self {
        let n = x.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trees = (0..n_trees.max(1))
            .map(|_| {
                let mut idx: Vec<usize> = if n_trees <= 1 {
                    (0..n).collect()
                } else {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                };
                let mut b = Builder {
                    x,
                    y,
                    params,
                    rng: ChaCha8Rng::seed_from_u64(rng.random()),
                };
                b.build(&mut idx, 0)
            })
            .collect();
        RandomForest { trees }
    }

    /// Mean class-1 leaf fraction over trees.
    pub fn p1(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.p1(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.p1(x) > 0.5)
    }
}
