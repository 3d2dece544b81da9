//! Numerical transform kernels: DFT magnitude spectra and the discrete
//! wavelet transform with its mother-wavelet library.

mod spectrum;
mod wavelet;

pub use spectrum::{next_pow2, stft_magnitude, Spectrum, Taper};
pub use wavelet::{
    center_frequency, dwt, idwt, max_levels, pseudo_frequency, score_wavelets,
    select_mother_wavelet, wavelet, MotherWaveletChoice, SelectionCriterion, Wavelet,
    WaveletDecomposition, WaveletScore, ENTROPY_FLOOR, TIE_BAND, WAVELET_LIBRARY,
};
