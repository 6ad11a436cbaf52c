//! Framing, windowing and the mel-cepstrum front end.
//!
//! The mel scale is the HTK one, `mel = 2595 log10(1 + f / 700)`. Cepstra are
//! the orthonormal type-II DCT of log mel filterbank outputs computed from the
//! magnitude spectrum, with a floor of `1e-10` before the logarithm.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSource, Waveform};

/// Floor applied to filterbank outputs before taking the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * libm::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / n as f64))
        .collect()
}

/// Number of frames produced for `n` samples: one frame when the signal is
/// shorter than a frame, otherwise enough frames to cover every sample.
pub fn frame_count(n: usize, frame_len: usize, shift: usize) -> usize {
    if n <= frame_len {
        1
    } else {
        (n - frame_len).div_ceil(shift) + 1
    }
}

fn seconds_to_samples(seconds: f64, sample_rate: u32) -> Result<usize> {
    let samples = libm::round(seconds * sample_rate as f64);
    if !samples.is_finite() || samples > u32::MAX as f64 {
        return Err(Error::FrameTooLong(seconds));
    }
    Ok(samples as usize)
}

/// Windowed, equally sized analysis frames stored back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct Frames {
    frame_len: usize,
    shift: usize,
    data: Vec<f64>,
}

impl Frames {
    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// Hop between frame starts, in samples.
    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.frame_len
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.frame_len..(t + 1) * self.frame_len]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.frame_len)
    }
}

/// Cut `w` into Hann-windowed frames. Frame `t` covers samples
/// `[t * shift, t * shift + len)`; samples past the end are zero.
pub fn frame_and_window(w: &Waveform, frame_len_s: f64, frame_shift_s: f64) -> Result<Frames> {
    if !(frame_shift_s > 0.0) || !(frame_len_s >= frame_shift_s) {
        return Err(Error::InvalidParameter(alloc::format!(
            "need frame_len_s >= frame_shift_s > 0, got {frame_len_s} and {frame_shift_s}"
        )));
    }
    let frame_len = seconds_to_samples(frame_len_s, w.sample_rate())?;
    let shift = seconds_to_samples(frame_shift_s, w.sample_rate())?;
    if shift == 0 || frame_len == 0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "frame shift of {frame_shift_s} s is shorter than one sample"
        )));
    }
    Ok(frame_with_window(w.samples(), frame_len, shift, &hann(frame_len)))
}

pub(crate) fn frame_with_window(samples: &[f64], frame_len: usize, shift: usize, window: &[f64]) -> Frames {
    let count = frame_count(samples.len(), frame_len, shift);
    let mut data = vec![0.0; count * frame_len];
    for (t, frame) in data.chunks_exact_mut(frame_len).enumerate() {
        let start = t * shift;
        let end = (start + frame_len).min(samples.len());
        if start < end {
            frame[..end - start].copy_from_slice(&samples[start..end]);
        }
        frame.iter_mut().zip(window).for_each(|(s, w)| *s *= w);
    }
    Frames { frame_len, shift, data }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Complex {
    re: f64,
    im: f64,
}

/// In-place iterative radix-2 FFT. `buf.len()` must be a power of two.
fn fft_in_place(buf: &mut [Complex]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let (s, c) = libm::sincos(ang * k as f64);
                let a = buf[start + k];
                let b = buf[start + k + len / 2];
                let t = Complex { re: b.re * c - b.im * s, im: b.re * s + b.im * c };
                buf[start + k] = Complex { re: a.re + t.re, im: a.im + t.im };
                buf[start + k + len / 2] = Complex { re: a.re - t.re, im: a.im - t.im };
            }
        }
        len <<= 1;
    }
}

/// Magnitude spectrum `|X[k]|`, `k = 0..=n_fft/2`, of `frame` zero-padded to
/// `n_fft` (a power of two, at least the frame length).
pub fn magnitude_spectrum(frame: &[f64], n_fft: usize) -> Vec<f64> {
    assert!(n_fft.is_power_of_two() && n_fft >= frame.len());
    let mut buf = vec![Complex { re: 0.0, im: 0.0 }; n_fft];
    buf.iter_mut().zip(frame).for_each(|(b, &s)| b.re = s);
    fft_in_place(&mut buf);
    buf[..=n_fft / 2]
        .iter()
        .map(|c| libm::sqrt(c.re * c.re + c.im * c.im))
        .collect()
}

/// Triangular filters on the HTK mel scale spanning `[0, fs/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    n_bins: usize,
    edges_hz: Vec<f64>,
    weights: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(sample_rate: u32, n_fft: usize, n_mels: usize) -> Result<Self> {
        let n_bins = n_fft / 2 + 1;
        if n_mels == 0 || n_mels > n_bins {
            return Err(Error::InvalidParameter(alloc::format!(
                "n_mels must be in 1..={n_bins}, got {n_mels}"
            )));
        }
        let nyquist = sample_rate as f64 / 2.0;
        let top = hz_to_mel(nyquist);
        let mut edges_hz: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
            .collect();
        // Pin the outer edges so the filters cover the band exactly.
        edges_hz[0] = 0.0;
        edges_hz[n_mels + 1] = nyquist;

        let bin_hz = sample_rate as f64 / n_fft as f64;
        let mut weights = vec![0.0; n_mels * n_bins];
        for m in 0..n_mels {
            let (lo, mid, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
            let row = &mut weights[m * n_bins..(m + 1) * n_bins];
            for (k, w) in row.iter_mut().enumerate() {
                let f = k as f64 * bin_hz;
                *w = if f >= lo && f <= mid && mid > lo {
                    (f - lo) / (mid - lo)
                } else if f > mid && f <= hi && hi > mid {
                    (hi - f) / (hi - mid)
                } else {
                    0.0
                };
            }
            if row.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidParameter(alloc::format!(
                    "mel filter {m} contains no FFT bin; use fewer mel bands or a longer FFT"
                )));
            }
        }
        Ok(Self { n_bins, edges_hz, weights })
    }

    pub fn n_mels(&self) -> usize {
        self.edges_hz.len() - 2
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Filter `m` is supported on `[edges[m], edges[m + 2]]` and peaks at `edges[m + 1]`.
    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.edges_hz[1..self.edges_hz.len() - 1]
    }

    pub fn filter(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn apply(&self, spectrum: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.n_bins)
            .map(|row| row.iter().zip(spectrum).map(|(w, s)| w * s).sum())
            .collect()
    }
}

/// Orthonormal type-II DCT, first `n_out` coefficients.
pub fn dct2_ortho(input: &[f64], n_out: usize) -> Vec<f64> {
    let n = input.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { libm::sqrt(1.0 / n) } else { libm::sqrt(2.0 / n) };
            let sum: f64 = input
                .iter()
                .enumerate()
                .map(|(i, x)| x * libm::cos(PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)))
                .sum();
            scale * sum
        })
        .collect()
}

/// Parameters of the mel-cepstrum extractor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelCepstrumConfig {
    pub frame_len_s: f64,
    pub frame_shift_s: f64,
    /// `None` picks the next power of two at or above the frame length.
    pub n_fft: Option<usize>,
    pub n_mels: usize,
    pub n_ceps: usize,
}

impl Default for MelCepstrumConfig {
    fn default() -> Self {
        Self { frame_len_s: 0.025, frame_shift_s: 0.010, n_fft: None, n_mels: 40, n_ceps: 13 }
    }
}

impl MelCepstrumConfig {
    pub fn resolved_n_fft(&self, sample_rate: u32) -> Result<usize> {
        let frame_len = seconds_to_samples(self.frame_len_s, sample_rate)?;
        match self.n_fft {
            Some(n) if n.is_power_of_two() && n >= frame_len => Ok(n),
            Some(n) => Err(Error::InvalidParameter(alloc::format!(
                "n_fft must be a power of two >= the frame length ({frame_len}), got {n}"
            ))),
            None => Ok(frame_len.max(1).next_power_of_two()),
        }
    }
}

/// Log mel filterbank outputs per frame (`ln(max(e, 1e-10))`).
pub fn log_mel_energies(w: &Waveform, cfg: &MelCepstrumConfig) -> Result<Vec<Vec<f64>>> {
    let n_fft = cfg.resolved_n_fft(w.sample_rate())?;
    let frames = frame_and_window(w, cfg.frame_len_s, cfg.frame_shift_s)?;
    let bank = MelFilterbank::new(w.sample_rate(), n_fft, cfg.n_mels)?;
    Ok(frames
        .iter()
        .map(|frame| {
            bank.apply(&magnitude_spectrum(frame, n_fft))
                .into_iter()
                .map(|e| libm::log(e.max(LOG_FLOOR)))
                .collect()
        })
        .collect())
}

/// Mel-frequency cepstra, one row per frame. Column 0 is the energy term.
pub fn mel_cepstra(w: &Waveform, cfg: &MelCepstrumConfig) -> Result<FeatureMatrix> {
    let n_fft = cfg.resolved_n_fft(w.sample_rate())?;
    if cfg.n_ceps == 0 || cfg.n_ceps > cfg.n_mels || cfg.n_mels > n_fft / 2 + 1 {
        return Err(Error::InvalidParameter(alloc::format!(
            "need 1 <= n_ceps ({}) <= n_mels ({}) <= n_fft/2 + 1 ({})",
            cfg.n_ceps,
            cfg.n_mels,
            n_fft / 2 + 1
        )));
    }
    let log_mels = log_mel_energies(w, cfg)?;
    let rows = log_mels.len();
    let mut values = Vec::with_capacity(rows * cfg.n_ceps);
    for frame in &log_mels {
        values.extend(dct2_ortho(frame, cfg.n_ceps).into_iter().map(|c| c as f32));
    }
    let shift = seconds_to_samples(cfg.frame_shift_s, w.sample_rate())?;
    FeatureMatrix::new(
        rows,
        cfg.n_ceps,
        values,
        FeatureSource::MelCepstrum,
        shift as f64 / w.sample_rate() as f64,
    )
}
