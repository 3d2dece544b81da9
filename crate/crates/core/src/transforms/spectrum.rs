use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT of a real sequence (zero-padded to `n`).
pub(crate) fn dft(x: &[f64], n: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    buf
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taper {
    #[default]
    Hann,
    Rectangular,
}

impl Taper {
    pub fn weights(self, len: usize) -> Vec<f64> {
        match self {
            Taper::Rectangular => vec![1.0; len],
            // periodic Hann
            Taper::Hann => (0..len)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// One-sided DFT magnitude spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub magnitudes: Vec<f64>,
    pub bin_hz: f64,
    pub n_fft: usize,
}

impl Spectrum {
    pub fn frequency_of(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }

    pub fn argmax(&self) -> usize {
        self.magnitudes
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &m)| {
                if m > best.1 {
                    (i, m)
                } else {
                    best
                }
            })
            .0
    }

    /// Energy of the underlying (tapered, zero-padded) sequence recovered from
    /// the one-sided magnitudes via Parseval's identity.
    pub fn parseval_energy(&self) -> f64 {
        let n = self.n_fft;
        let last = n / 2;
        let sum: f64 = self
            .magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let w = if k == 0 || (n % 2 == 0 && k == last) {
                    1.0
                } else {
                    2.0
                };
                w * m * m
            })
            .sum();
        sum / n as f64
    }
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Magnitude of the DFT of `segment` (tapered, zero-padded to `n_fft`),
/// non-negative frequency bins only.
pub fn stft_magnitude(segment: &[f64], rate: f64, n_fft: usize, taper: Taper) -> Result<Spectrum> {
    if segment.is_empty() {
        return Err(Error::Data("empty segment".into()));
    }
    if n_fft < segment.len() {
        return Err(Error::Config(format!(
            "n_fft {n_fft} is shorter than the segment ({} samples)",
            segment.len()
        )));
    }
    let tapered: Vec<f64> = match taper {
        Taper::Rectangular => segment.to_vec(),
        _ => segment
            .iter()
            .zip(taper.weights(segment.len()))
            .map(|(x, w)| x * w)
            .collect(),
    };
    let spec = dft(&tapered, n_fft);
    Ok(Spectrum {
        magnitudes: spec[..n_fft / 2 + 1].iter().map(|c| c.norm()).collect(),
        bin_hz: rate / n_fft as f64,
        n_fft,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft_mag(x: &[f64], k: usize) -> f64 {
        let n = x.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in x.iter().enumerate() {
            let a = -2.0 * PI * k as f64 * t as f64 / n;
            re += v * a.cos();
            im += v * a.sin();
        }
        (re * re + im * im).sqrt()
    }

    #[test]
    fn pure_tone_lands_on_its_bin() {
        let x: Vec<f64> = (0..1000)
            .map(|i| (2.0 * PI * 100.0 * i as f64 / 1000.0).sin())
            .collect();
        let s = stft_magnitude(&x, 1000.0, 1000, Taper::Rectangular).unwrap();
        assert_eq!(s.argmax(), 100);
        assert_eq!(s.bin_hz, 1.0);
        assert_eq!(s.magnitudes.len(), 501);
    }

    #[test]
    fn zeros_give_zero_spectrum() {
        let s = stft_magnitude(&[0.0; 64], 100.0, 64, Taper::Hann).unwrap();
        assert!(s.magnitudes.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn matches_direct_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..48).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = stft_magnitude(&x, 1.0, 48, Taper::Rectangular).unwrap();
        for k in 0..=24 {
            assert!((s.magnitudes[k] - naive_dft_mag(&x, k)).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_empty_and_short_nfft() {
        assert!(stft_magnitude(&[], 1.0, 8, Taper::Hann).is_err());
        assert!(stft_magnitude(&[1.0; 16], 1.0, 8, Taper::Hann).is_err());
    }
}
