//! Scalar statistics shared by clustering summaries, the feature factory and
//! the interpretation report.
//!
//! All moments are population (biased) moments. Functions that can hit a
//! degenerate input return a [`Stat`] carrying the fallback value and a flag.

/// A statistic value plus whether a degenerate-input fallback was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub value: f64,
    pub degenerate: bool,
}

impl Stat {
    pub fn ok(value: f64) -> Self {
        Stat {
            value,
            degenerate: false,
        }
    }

    pub fn fallback(value: f64) -> Self {
        Stat {
            value,
            degenerate: true,
        }
    }
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    central_moment(x, 2).sqrt()
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (energy(x) / x.len() as f64).sqrt()
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn min(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn central_moment(x: &[f64], order: i32) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(order)).sum::<f64>() / x.len() as f64
}

/// Relative variance floor below which a carrier counts as constant.
const VARIANCE_FLOOR: f64 = 1e-24;

fn is_flat(x: &[f64], m2: f64) -> bool {
    let scale = x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64;
    m2 <= VARIANCE_FLOOR * scale.max(f64::MIN_POSITIVE) || m2 == 0.0
}

pub fn skewness(x: &[f64]) -> Stat {
    let m2 = central_moment(x, 2);
    if x.len() < 2 || is_flat(x, m2) {
        return Stat::fallback(0.0);
    }
    Stat::ok(central_moment(x, 3) / m2.powf(1.5))
}

pub fn excess_kurtosis(x: &[f64]) -> Stat {
    let m2 = central_moment(x, 2);
    if x.len() < 2 || is_flat(x, m2) {
        return Stat::fallback(0.0);
    }
    Stat::ok(central_moment(x, 4) / (m2 * m2) - 3.0)
}

/// Quantile with linear interpolation between order statistics of `sorted`
/// (the "type 7" definition).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

pub fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(x: &[f64]) -> f64 {
    quantile_sorted(&sorted_copy(x), 0.5)
}

pub fn iqr(x: &[f64]) -> f64 {
    let s = sorted_copy(x);
    quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)
}

/// Shannon entropy (nats) of the normalized squared values.
pub fn shannon_entropy(x: &[f64]) -> Stat {
    let e = energy(x);
    if e <= 0.0 {
        return Stat::fallback(0.0);
    }
    let h = x
        .iter()
        .map(|v| v * v / e)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Stat::ok(h)
}

/// Peak magnitude over RMS.
pub fn crest_factor(x: &[f64]) -> Stat {
    let r = rms(x);
    if r <= 0.0 {
        return Stat::fallback(0.0);
    }
    let peak = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    Stat::ok(peak / r)
}

/// Number of sign changes between consecutive samples; zeros carry the
/// sign of the last non-zero sample.
pub fn zero_cross_count(x: &[f64]) -> usize {
    let mut last = 0.0_f64;
    let mut count = 0;
    for &v in x {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// Five-number summary (min, q1, median, q3, max) with interpolated quartiles.
pub fn five_number(x: &[f64]) -> [f64; 5] {
    let s = sorted_copy(x);
    [
        quantile_sorted(&s, 0.0),
        quantile_sorted(&s, 0.25),
        quantile_sorted(&s, 0.5),
        quantile_sorted(&s, 0.75),
        quantile_sorted(&s, 1.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn zero_cross_alternating() {
        assert_eq!(zero_cross_count(&[1.0, -1.0, 1.0, -1.0]), 3);
        assert_eq!(zero_cross_count(&[0.0, 0.0]), 0);
        assert_eq!(zero_cross_count(&[1.0, 0.0, -1.0]), 1);
    }

    #[test]
    fn kurtosis_of_gaussian_sample_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let k = excess_kurtosis(&x);
        assert!(!k.degenerate);
        assert!(k.value.abs() < 0.2, "{}", k.value);
        assert!(skewness(&x).value.abs() < 0.05);
    }

    #[test]
    fn degenerate_moments_fall_back() {
        let c = [3.0; 16];
        assert_eq!(skewness(&c), Stat::fallback(0.0));
        assert_eq!(excess_kurtosis(&c), Stat::fallback(0.0));
        assert_eq!(shannon_entropy(&[0.0; 4]), Stat::fallback(0.0));
        assert_eq!(crest_factor(&[0.0; 4]), Stat::fallback(0.0));
    }

    #[test]
    fn five_number_textbook() {
        assert_eq!(five_number(&[5.0, 3.0, 1.0, 2.0, 4.0]), [1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(five_number(&[7.0]), [7.0; 5]);
    }

    #[test]
    fn entropy_of_single_spike_is_zero() {
        let h = shannon_entropy(&[0.0, 2.0, 0.0]);
        assert_eq!(h.value, 0.0);
        let flat = shannon_entropy(&[1.0; 4]);
        assert!((flat.value - 4f64.ln()).abs() < 1e-15);
    }
}
