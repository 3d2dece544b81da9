//! Principal component projection and the PCA + SVM baseline.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{evaluate, train_with, ClassifierKind, Grid, Metric, MetricReport, TuningBudget};
use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a direction counts as rank-deficient.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit principal directions, largest variance first.
    pub components: Vec<Vec<f64>>,
    /// Variance along each retained direction.
    pub explained_variance: Vec<f64>,
}

impl Pca {
    /// Fits up to `n_components` directions on `x` (rows are samples).
    /// Directions with negligible variance are dropped, so fewer may be kept.
    pub fn fit(x: &[Vec<f64>], n_components: usize) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(Error::Data("PCA needs at least two rows".into()));
        }
        let d = x[0].len();
        let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let xc = DMatrix::from_fn(n, d, |i, j| x[i][j] - mean[j]);
        let denom = (n - 1) as f64;
        // eigen-decompose the smaller of the covariance and the Gram matrix
        let (values, vectors) = if d <= n {
            let cov = xc.transpose() * &xc / denom;
            let e = SymmetricEigen::new(cov);
            (e.eigenvalues, e.eigenvectors)
        } else {
            let gram = &xc * xc.transpose() / denom;
            let e = SymmetricEigen::new(gram);
            let mut v = xc.transpose() * &e.eigenvectors;
            for (k, mut col) in v.column_iter_mut().enumerate() {
                let norm = col.norm();
                if norm > 0.0 && e.eigenvalues[k] > 0.0 {
                    col /= norm;
                }
            }
            (e.eigenvalues, v)
        };
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let top = values[order[0]].max(0.0);
        let mut components = Vec::new();
        let mut explained_variance = Vec::new();
        for &k in order.iter().take(n_components) {
            if values[k] <= RANK_TOLERANCE * top || top == 0.0 {
                break;
            }
            let mut dir: Vec<f64> = vectors.column(k).iter().copied().collect();
            // fix the sign so the largest-magnitude entry is positive
            let lead = dir
                .iter()
                .copied()
                .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            if lead < 0.0 {
                dir.iter_mut().for_each(|v| *v = -*v);
            }
            components.push(dir);
            explained_variance.push(values[k]);
        }
        if components.len() < n_components {
            log::warn!(
                "PCA: requested {n_components} components, data rank supports {}",
                components.len()
            );
        }
        Ok(Pca {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn project(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|r| {
                self.components
                    .iter()
                    .map(|c| c.iter().zip(r.iter().zip(&self.mean)).map(|(w, (v, m))| w * (v - m)).sum())
                    .collect()
            })
            .collect()
    }

    pub fn reconstruct(&self, z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        z.iter()
            .map(|s| {
                let mut r = self.mean.clone();
                for (coef, c) in s.iter().zip(&self.components) {
                    for (v, w) in r.iter_mut().zip(c) {
                        *v += coef * w;
                    }
                }
                r
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaRow {
    pub n_components_requested: usize,
    pub n_components_used: usize,
    pub kind: ClassifierKind,
    pub spec: super::ClassifierSpec,
    pub eval: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBaseline {
    pub rows: Vec<PcaRow>,
    /// Index into `rows` of the best Eval metric (first on ties).
    pub best: usize,
}

impl PcaBaseline {
    pub fn best_row(&self) -> &PcaRow {
        &self.rows[self.best]
    }
}

/// Projects Train and Eval onto the top Train principal directions and
/// tunes a linear and an RBF SVM for each requested component count.
#[allow(clippy::too_many_arguments)]
pub fn pca_baseline(
    x_train: &[Vec<f64>],
    y_train: &[u8],
    x_eval: &[Vec<f64>],
    y_eval: &[u8],
    n_components_list: &[usize],
    metric: Metric,
    grid: &Grid,
    budget: &TuningBudget,
) -> Result<PcaBaseline> {
    if n_components_list.is_empty() || n_components_list.contains(&0) {
        return Err(Error::Config("component counts must be a non-empty list of positive integers".into()));
    }
    let d = x_train.first().map_or(0, Vec::len);
    let max = *n_components_list.iter().max().expect("non-empty");
    if max > x_train.len().min(d) {
        return Err(Error::Config(format!(
            "{max} components exceed min(n_train, d) = {}",
            x_train.len().min(d)
        )));
    }
    let pca = Pca::fit(x_train, max)?;
    let mut rows = Vec::new();
    for &k in n_components_list {
        let used = k.min(pca.components.len()).max(1);
        let sub = Pca {
            mean: pca.mean.clone(),
            components: pca.components[..used.min(pca.components.len())].to_vec(),
            explained_variance: pca.explained_variance[..used.min(pca.components.len())].to_vec(),
        };
        if sub.components.is_empty() {
            return Err(Error::Data("Train data has zero variance".into()));
        }
        let zt = sub.project(x_train);
        let ze = sub.project(x_eval);
        for kind in [ClassifierKind::SvmLinear, ClassifierKind::SvmRbf] {
            let mut best: Option<(super::ClassifierSpec, MetricReport)> = None;
            for (n, spec) in grid.points(kind, 0).into_iter().enumerate() {
                if n > 0 && budget.max_evaluations.is_some_and(|m| n >= m) {
                    break;
                }
                let model = train_with(&spec, &zt, y_train, false)?;
                let rep = evaluate(&model, &ze, y_eval, metric)?;
                if best.as_ref().is_none_or(|b| rep.value > b.1.value) {
                    best = Some((spec, rep));
                }
            }
            let (spec, eval) = best.expect("grid is non-empty");
            rows.push(PcaRow {
                n_components_requested: k,
                n_components_used: sub.components.len(),
                kind,
                spec,
                eval,
            });
        }
    }
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.eval.value > rows[best].eval.value {
            best = i;
        }
    }
    Ok(PcaBaseline { rows, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ClassifierSpec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn rank_one_truncates() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let p = Pca::fit(&x, 3).unwrap();
        assert_eq!(p.components.len(), 1);
    }

    #[test]
    fn two_d_projection_is_a_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..80 {
            let l = (i % 2) as u8;
            let c = if l == 0 { -1.5 } else { 1.5 };
            x.push(vec![c + rng.random_range(-1.0..1.0), 0.5 * c + rng.random_range(-2.0..2.0)]);
            y.push(l);
        }
        let (xt, xe) = x.split_at(50);
        let (yt, ye) = y.split_at(50);
        let p = Pca::fit(xt, 2).unwrap();
        let (zt, ze) = (p.project(xt), p.project(xe));
        for kind in [ClassifierKind::SvmLinear, ClassifierKind::SvmRbf] {
            let spec = Grid::default().points(kind, 0)[0].clone();
            // centering alone leaves distances and inner products of the
            // rotated data unchanged
            let center = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
                rows.iter().map(|r| r.iter().zip(&p.mean).map(|(v, m)| v - m).collect()).collect()
            };
            let a = train_with(&spec, &center(xt), yt, false).unwrap();
            let b = train_with(&spec, &zt, yt, false).unwrap();
            let ra = evaluate(&a, &center(xe), ye, Metric::Accuracy).unwrap();
            let rb = evaluate(&b, &ze, ye, Metric::Accuracy).unwrap();
            assert!((ra.value - rb.value).abs() < 1e-9, "{kind:?}");
        }
        let base = pca_baseline(xt, yt, xe, ye, &[1, 2], Metric::Accuracy, &Grid::default(), &TuningBudget::unlimited()).unwrap();
        assert_eq!(base.rows.len(), 4);
        assert!(matches!(base.best_row().spec, ClassifierSpec::SvmLinear { .. } | ClassifierSpec::SvmRbf { .. }));
    }

    #[test]
    fn wide_data_uses_gram_path() {
        let x = random_rows(6, 40, 4);
        let p = Pca::fit(&x, 5).unwrap();
        assert_eq!(p.components.len(), 5);
        for (i, a) in p.components.iter().enumerate() {
            for (j, b) in p.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
                assert!((dot - f64::from(u8::from(i == j))).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn variance_ordered_and_reconstruction_monotone(seed in 0u64..1000, n in 8usize..30, d in 2usize..8) {
            let x = random_rows(n, d, seed);
            let full = Pca::fit(&x, d.min(n)).unwrap();
            // eigenvalue oracle: variance of the projection on each direction
            let z = full.project(&x);
            for (k, ev) in full.explained_variance.iter().enumerate() {
                let var = z.iter().map(|r| r[k] * r[k]).sum::<f64>() / (n - 1) as f64;
                prop_assert!((var - ev).abs() < 1e-9 * ev.max(1.0));
            }
            for w in full.explained_variance.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            let mut last = f64::INFINITY;
            for k in 1..=full.components.len() {
                let p = Pca::fit(&x, k).unwrap();
                let rec = p.reconstruct(&p.project(&x));
                let err: f64 = rec.iter().zip(&x).flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).powi(2))).sum();
                prop_assert!(err <= last + 1e-9);
                last = err;
            }
        }
    }
}
