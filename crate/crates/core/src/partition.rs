//! Cluster-stratified Train/Eval/Test fold construction.
//!
//! Instances are summarized by a 16-dimensional descriptor, clustered with
//! k-means (cluster count picked by silhouette), and every (cluster, class)
//! cell is dealt across folds so each fold's Test share mirrors the cluster
//! mix of the whole dataset.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::SignalDataset;
use crate::error::{Error, Result};
use crate::stats;
use crate::transforms::{next_pow2, stft_magnitude, Taper};

pub const SUMMARY_DIM: usize = 16;
const KMEANS_RESTARTS: u64 = 10;
const KMEANS_MAX_ITER: usize = 100;
const SILHOUETTE_SAMPLE_CAP: usize = 500;

/// Number of folds from the size of the smaller class.
pub fn choose_fold_count(dataset: &SignalDataset) -> usize {
    let min_class = dataset.class_count(0).min(dataset.class_count(1));
    match min_class {
        n if n >= 25 => 5,
        n if n >= 9 => 3,
        _ => 2,
    }
}

/// Time-domain moments, zero-cross rate and the energy share of 8
/// octave-spaced DFT bands (highest octave first).
pub fn summary_vector(samples: &[f64], rate: f64) -> [f64; SUMMARY_DIM] {
    let mut v = [0.0; SUMMARY_DIM];
    v[0] = stats::mean(samples);
    v[1] = stats::std_dev(samples);
    v[2] = stats::rms(samples);
    v[3] = stats::min(samples);
    v[4] = stats::max(samples);
    v[5] = stats::skewness(samples).value;
    v[6] = stats::excess_kurtosis(samples).value;
    v[7] = stats::zero_cross_count(samples) as f64 / (samples.len() - 1).max(1) as f64;
    let n_fft = next_pow2(samples.len());
    let spec = stft_magnitude(samples, rate, n_fft, Taper::Rectangular)
        .expect("non-empty samples with n_fft >= len");
    let power: Vec<f64> = spec.magnitudes.iter().map(|m| m * m).collect();
    let total: f64 = power.iter().sum();
    let nyq_bin = power.len() - 1;
    for band in 0..8 {
        // band 0 covers (nyq/2, nyq], band 7 covers [0, nyq/128]
        let hi = nyq_bin >> band;
        let lo = if band == 7 { 0 } else { (nyq_bin >> (band + 1)) + 1 };
        let e: f64 = power[lo.min(hi)..=hi].iter().sum();
        v[8 + band] = if total > 0.0 { e / total } else { 0.0 };
    }
    v
}

/// Z-scored summary vectors for every instance (constant dimensions map to 0).
pub fn summary_vectors(dataset: &SignalDataset) -> Vec<Vec<f64>> {
    let raw: Vec<[f64; SUMMARY_DIM]> = dataset
        .instances
        .iter()
        .map(|i| summary_vector(&i.samples, dataset.sampling_rate_hz))
        .collect();
    let mut out = vec![vec![0.0; SUMMARY_DIM]; raw.len()];
    for d in 0..SUMMARY_DIM {
        let col: Vec<f64> = raw.iter().map(|r| r[d]).collect();
        let m = stats::mean(&col);
        let s = stats::std_dev(&col);
        for (row, v) in out.iter_mut().zip(&col) {
            row[d] = if s > 1e-12 * m.abs().max(1.0) { (v - m) / s } else { 0.0 };
        }
    }
    out
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 over the combined key
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(vectors: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut centers = vec![vectors[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let d2: Vec<f64> = vectors.iter().map(|v| nearest(v, &centers).1).collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(vectors[pick].clone());
    }
    centers
}

fn recompute_centers(vectors: &[Vec<f64>], assign: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = vectors[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (v, &c) in vectors.iter().zip(assign) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(v) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    sums
}

/// Moves the point farthest from its own center (taken from a cluster with
/// more than one member) into each empty cluster.
fn repair_empty(vectors: &[Vec<f64>], assign: &mut [usize], centers: &[Vec<f64>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &c in assign.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in vectors.iter().enumerate() {
            if counts[assign[i]] < 2 {
                continue;
            }
            let d = sq_dist(v, &centers[assign[i]]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, _)) => assign[i] = empty,
            None => return,
        }
    }
}

fn lloyd(vectors: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let mut centers = plus_plus_init(vectors, k, rng);
    let mut assign: Vec<usize> = vectors.iter().map(|v| nearest(v, &centers).0).collect();
    repair_empty(vectors, &mut assign, &centers, k);
    for _ in 0..KMEANS_MAX_ITER {
        centers = recompute_centers(vectors, &assign, k);
        let mut next: Vec<usize> = vectors.iter().map(|v| nearest(v, &centers).0).collect();
        repair_empty(vectors, &mut next, &centers, k);
        if next == assign {
            break;
        }
        assign = next;
    }
    let centers = recompute_centers(vectors, &assign, k);
    let objective = vectors
        .iter()
        .zip(&assign)
        .map(|(v, &c)| sq_dist(v, &centers[c]))
        .sum();
    (assign, objective)
}

/// Best of [`KMEANS_RESTARTS`] seeded k-means++ runs (lowest objective,
/// earlier restart on ties).
pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64, r));
        let run = lloyd(vectors, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

/// Mean silhouette with Euclidean distance; singleton clusters contribute 0.
pub fn silhouette_score(vectors: &[Vec<f64>], assignment: &[usize]) -> Result<f64> {
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &c in assignment {
        sizes[c] += 1;
    }
    let present = sizes.iter().filter(|&&n| n > 0).count();
    if present < 2 {
        return Err(Error::Data("silhouette needs at least two non-empty clusters".into()));
    }
    let n = vectors.len();
    let mut total = 0.0;
    for i in 0..n {
        let own = assignment[i];
        if sizes[own] == 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[assignment[j]] += dist(&vectors[i], &vectors[j]);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k_clusters: usize,
    /// Cluster id per vector, in input order.
    pub assignment: Vec<usize>,
    pub silhouette: f64,
    /// Mean silhouette for every candidate k tried.
    pub silhouette_by_k: Vec<(usize, f64)>,
}

/// Default candidate cluster counts, `[2, min(8, n - 1)]`.
pub fn default_k_range(n: usize) -> RangeInclusive<usize> {
    2..=8.min(n.saturating_sub(1)).max(2)
}

/// Runs k-means for each k in `k_range` and keeps the k with the highest
/// mean silhouette (smaller k on ties).
pub fn cluster_instances(
    vectors: &[Vec<f64>],
    k_range: RangeInclusive<usize>,
    seed: u64,
) -> Result<ClusteringResult> {
    let n = vectors.len();
    if n < 3 {
        return Err(Error::Data(format!("clustering needs at least 3 instances, got {n}")));
    }
    let lo = (*k_range.start()).max(2);
    let hi = (*k_range.end()).min(n - 1);
    if lo > hi {
        return Err(Error::Config(format!(
            "empty cluster-count range {k_range:?} for {n} instances"
        )));
    }
    let sample: Option<Vec<usize>> = (n > SILHOUETTE_SAMPLE_CAP).then(|| {
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5111, 0));
        idx.shuffle(&mut rng);
        idx.truncate(SILHOUETTE_SAMPLE_CAP);
        idx.sort_unstable();
        idx
    });
    let mut best: Option<ClusteringResult> = None;
    let mut by_k = Vec::new();
    for k in lo..=hi {
        let (assignment, _) = kmeans(vectors, k, seed);
        let s = match &sample {
            None => silhouette_score(vectors, &assignment)?,
            Some(idx) => {
                let v: Vec<Vec<f64>> = idx.iter().map(|&i| vectors[i].clone()).collect();
                let a: Vec<usize> = idx.iter().map(|&i| assignment[i]).collect();
                silhouette_score(&v, &a).unwrap_or(0.0)
            }
        };
        by_k.push((k, s));
        if best.as_ref().is_none_or(|b| s > b.silhouette) {
            best = Some(ClusteringResult {
                k_clusters: k,
                assignment,
                silhouette: s,
                silhouette_by_k: Vec::new(),
            });
        }
    }
    let mut best = best.expect("non-empty k range");
    best.silhouette_by_k = by_k;
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Train,
    Eval,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub instance_id: u64,
    pub fold: usize,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub seed: u64,
    /// Instance ids in dataset order.
    pub instance_ids: Vec<u64>,
    /// `roles[fold][i]` is the role of instance `i` (dataset order) in `fold`.
    pub roles: Vec<Vec<Role>>,
    /// Moves made to guarantee class presence in every role.
    pub repairs: Vec<String>,
}

/// `folds.json` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldsFile {
    pub schema_version: u32,
    pub n_folds: usize,
    pub seed: u64,
    pub assignments: Vec<FoldAssignment>,
}

impl FoldPlan {
    pub fn indices(&self, fold: usize, role: Role) -> Vec<usize> {
        self.roles[fold]
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == role)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn role(&self, fold: usize, index: usize) -> Role {
        self.roles[fold][index]
    }

    pub fn to_file(&self) -> FoldsFile {
        let assignments = (0..self.n_folds)
            .flat_map(|f| {
                self.instance_ids
                    .iter()
                    .zip(&self.roles[f])
                    .map(move |(&id, &role)| FoldAssignment {
                        instance_id: id,
                        fold: f,
                        role,
                    })
            })
            .collect();
        FoldsFile {
            schema_version: 1,
            n_folds: self.n_folds,
            seed: self.seed,
            assignments,
        }
    }

    /// Rebuilds a plan from `folds.json`, ordered like `dataset`.
    pub fn from_file(file: &FoldsFile, dataset: &SignalDataset) -> Result<Self> {
        let mut roles = vec![vec![None; dataset.len()]; file.n_folds];
        for a in &file.assignments {
            let idx = dataset.index_of(a.instance_id).ok_or_else(|| {
                Error::Data(format!("folds file names unknown instance {}", a.instance_id))
            })?;
            if a.fold >= file.n_folds {
                return Err(Error::Data(format!("fold index {} out of range", a.fold)));
            }
            roles[a.fold][idx] = Some(a.role);
        }
        let roles = roles
            .into_iter()
            .map(|fold| {
                fold.into_iter()
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::Data("folds file does not cover every instance".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FoldPlan {
            n_folds: file.n_folds,
            seed: file.seed,
            instance_ids: dataset.instances.iter().map(|i| i.instance_id).collect(),
            roles,
            repairs: Vec::new(),
        })
    }
}

/// Smallest class size that leaves at least one Test, one Train and one Eval
/// member of the class in every fold.
pub fn min_class_size(n_folds: usize) -> usize {
    (n_folds..)
        .find(|&c| c - c.div_ceil(n_folds) >= 2)
        .expect("unbounded search")
}

/// Cluster-stratified fold dealing.
///
/// Each cluster occupies a contiguous run of round-robin Test slots (so its
/// members split across folds within one of `|c| / n_folds`); class members
/// are placed into those slots greedily toward the fold holding the fewest of
/// that class. Non-test members are dealt Train:Eval = 3:1 per class. Any
/// role left without a class afterwards receives one member moved from the
/// largest cell that can spare it.
pub fn build_fold_plan(
    dataset: &SignalDataset,
    clustering: &ClusteringResult,
    n_folds: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {n_folds}")));
    }
    if clustering.assignment.len() != dataset.len() {
        return Err(Error::Invariant("clustering does not cover the dataset".into()));
    }
    let required = min_class_size(n_folds);
    for class in 0..2u8 {
        let count = dataset.class_count(class);
        if count < required {
            return Err(Error::InsufficientClass {
                class,
                count,
                required,
                n_folds,
            });
        }
    }
    let labels = dataset.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xF01D, 0));
    let mut cells: BTreeMap<(usize, u8), Vec<usize>> = BTreeMap::new();
    for (i, (&c, &y)) in clustering.assignment.iter().zip(&labels).enumerate() {
        cells.entry((c, y)).or_default().push(i);
    }
    for members in cells.values_mut() {
        members.shuffle(&mut rng);
    }

    let n = dataset.len();
    let mut test_fold = vec![usize::MAX; n];
    let mut class_test = [vec![0usize; n_folds], vec![0usize; n_folds]];
    let mut offset = 0usize;
    let k = clustering.assignment.iter().copied().max().unwrap_or(0) + 1;
    for cluster in 0..k {
        let size: usize = (0..2u8)
            .map(|y| cells.get(&(cluster, y)).map_or(0, Vec::len))
            .sum();
        let mut capacity = vec![0usize; n_folds];
        for p in offset..offset + size {
            capacity[p % n_folds] += 1;
        }
        let phase = offset % n_folds;
        offset += size;
        for y in 0..2u8 {
            let Some(members) = cells.get(&(cluster, y)) else {
                continue;
            };
            for &i in members {
                let f = (0..n_folds)
                    .map(|s| (phase + s) % n_folds)
                    .filter(|&f| capacity[f] > 0)
                    .min_by_key(|&f| class_test[y as usize][f])
                    .expect("capacity matches cluster size");
                capacity[f] -= 1;
                class_test[y as usize][f] += 1;
                test_fold[i] = f;
            }
        }
    }

    let mut repairs = Vec::new();
    // class presence in every Test share
    for y in 0..2u8 {
        for f in 0..n_folds {
            if class_test[y as usize][f] > 0 {
                continue;
            }
            let donor = (0..n_folds)
                .filter(|&g| class_test[y as usize][g] >= 2)
                .max_by_key(|&g| (class_test[y as usize][g], std::cmp::Reverse(g)))
                .ok_or_else(|| {
                    Error::Invariant(format!("no donor fold for class {y} test share"))
                })?;
            let i = take_from_largest_cell(&cells, y, |i| test_fold[i] == donor)
                .ok_or_else(|| Error::Invariant("donor fold lost its members".into()))?;
            test_fold[i] = f;
            class_test[y as usize][donor] -= 1;
            class_test[y as usize][f] += 1;
            repairs.push(format!(
                "fold {f}: moved instance {} (class {y}) into Test from fold {donor}",
                dataset.instances[i].instance_id
            ));
        }
    }

    let mut roles = vec![vec![Role::Train; n]; n_folds];
    for (f, fold_roles) in roles.iter_mut().enumerate() {
        for y in 0..2u8 {
            let mut counter = 0usize;
            for ((_, cy), members) in &cells {
                if *cy != y {
                    continue;
                }
                for &i in members {
                    if test_fold[i] == f {
                        fold_roles[i] = Role::Test;
                    } else {
                        fold_roles[i] = if counter % 4 == 3 { Role::Eval } else { Role::Train };
                        counter += 1;
                    }
                }
            }
            for (missing, source) in [(Role::Eval, Role::Train), (Role::Train, Role::Eval)] {
                let present = (0..n).any(|i| labels[i] == y && fold_roles[i] == missing);
                if present {
                    continue;
                }
                let i = take_from_largest_cell(&cells, y, |i| fold_roles[i] == source)
                    .ok_or_else(|| Error::InsufficientClass {
                        class: y,
                        count: dataset.class_count(y),
                        required,
                        n_folds,
                    })?;
                fold_roles[i] = missing;
                repairs.push(format!(
                    "fold {f}: moved instance {} (class {y}) from {source:?} to {missing:?}",
                    dataset.instances[i].instance_id
                ));
            }
        }
    }

    Ok(FoldPlan {
        n_folds,
        seed,
        instance_ids: dataset.instances.iter().map(|i| i.instance_id).collect(),
        roles,
        repairs,
    })
}

/// Last qualifying member of the class-`y` cell with the most qualifying
/// members (lowest cluster id on ties).
fn take_from_largest_cell(
    cells: &BTreeMap<(usize, u8), Vec<usize>>,
    y: u8,
    qualifies: impl Fn(usize) -> bool,
) -> Option<usize> {
    let mut best: Option<(usize, Vec<usize>)> = None;
    for ((_, cy), members) in cells {
        if *cy != y {
            continue;
        }
        let q: Vec<usize> = members.iter().copied().filter(|&i| qualifies(i)).collect();
        if !q.is_empty() && best.as_ref().is_none_or(|(n, _)| q.len() > *n) {
            best = Some((q.len(), q));
        }
    }
    best.and_then(|(_, q)| q.last().copied())
}

/// Clusters the dataset's summary vectors and deals the folds.
pub fn plan_folds(dataset: &SignalDataset, n_folds: Option<usize>, seed: u64) -> Result<(ClusteringResult, FoldPlan)> {
    let vectors = summary_vectors(dataset);
    let clustering = cluster_instances(&vectors, default_k_range(vectors.len()), seed)?;
    let n_folds = n_folds.unwrap_or_else(|| choose_fold_count(dataset));
    let plan = build_fold_plan(dataset, &clustering, n_folds, seed)?;
    Ok((clustering, plan))
}
