//! Formant frequencies from peaks of the LPC spectral envelope.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::acoustic::lpc::lpc;
use crate::acoustic::parabolic_offset;
use crate::acoustic::pitch::{estimate_f0, PitchConfig};
use crate::dsp::hann;
use crate::error::{Error, Result};
use crate::features::Waveform;

pub const MAX_FORMANTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormantConfig {
    /// `None` uses `fs / 1000 + 2`, capped at 16.
    pub lpc_order: Option<usize>,
    /// Number of formants to report, at most [`MAX_FORMANTS`].
    pub count: usize,
    pub frame_len_s: f64,
    pub pre_emphasis: f64,
    pub min_hz: f64,
    pub grid_points: usize,
    /// Voicing decisions and the frame hop come from the pitch tracker.
    pub pitch: PitchConfig,
}

impl Default for FormantConfig {
    fn default() -> Self {
        Self {
            lpc_order: None,
            count: 3,
            frame_len_s: 0.025,
            pre_emphasis: 0.97,
            min_hz: 90.0,
            grid_points: 512,
            pitch: PitchConfig::default(),
        }
    }
}

pub fn default_lpc_order(sample_rate: u32) -> usize {
    (sample_rate as usize / 1000 + 2).min(16)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormantFrame {
    pub time_s: f64,
    /// Resolved formants in ascending order; shorter than requested when
    /// the envelope has too few peaks, empty when LPC failed.
    pub formants_hz: Vec<f64>,
    pub lpc_order: usize,
}

impl FormantFrame {
    pub fn get(&self, index: usize) -> Option<f64> {
        self.formants_hz.get(index).copied()
    }

    pub fn f1(&self) -> Option<f64> {
        self.get(0)
    }

    pub fn f2(&self) -> Option<f64> {
        self.get(1)
    }

    pub fn f3(&self) -> Option<f64> {
        self.get(2)
    }
}

/// LPC envelope in dB, `-10 log10 |A(e^jw)|^2`, on `points` frequencies
/// evenly spaced from 0 to Nyquist inclusive.
pub fn lpc_envelope_db(coefficients: &[f64], points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            let w = PI * i as f64 / (points - 1) as f64;
            let (mut re, mut im) = (1.0, 0.0);
            for (k, a) in coefficients.iter().enumerate() {
                let (s, c) = libm::sincos(w * (k + 1) as f64);
                re -= a * c;
                im += a * s;
            }
            -10.0 * libm::log10(re * re + im * im)
        })
        .collect()
}

/// Local maxima of the envelope above `min_hz`, refined by a parabola.
pub fn envelope_peaks(envelope: &[f64], nyquist_hz: f64, min_hz: f64, limit: usize) -> Vec<f64> {
    let step = nyquist_hz / (envelope.len() - 1) as f64;
    let mut peaks = Vec::new();
    for k in 1..envelope.len() - 1 {
        if peaks.len() == limit {
            break;
        }
        let (a, b, c) = (envelope[k - 1], envelope[k], envelope[k + 1]);
        if b > a && b >= c {
            let hz = (k as f64 + parabolic_offset(a, b, c)) * step;
            if hz > min_hz {
                peaks.push(hz);
            }
        }
    }
    peaks
}

/// Formants of every voiced frame of `w`.
pub fn formants(w: &Waveform, cfg: &FormantConfig) -> Result<Vec<FormantFrame>> {
    if cfg.count == 0 || cfg.count > MAX_FORMANTS {
        return Err(Error::InvalidParameter(alloc::format!(
            "formant count must be in 1..={MAX_FORMANTS}, got {}",
            cfg.count
        )));
    }
    if cfg.grid_points < 3 {
        return Err(Error::InvalidParameter("envelope grid needs at least 3 points".into()));
    }
    let fs = w.sample_rate();
    let order = cfg.lpc_order.unwrap_or_else(|| default_lpc_order(fs));
    let frame_len = libm::round(cfg.frame_len_s * fs as f64) as usize;
    if frame_len <= order {
        return Err(Error::InvalidParameter(alloc::format!(
            "frame of {frame_len} samples is too short for LPC order {order}"
        )));
    }
    let pitch = estimate_f0(w, &cfg.pitch)?;
    let hop = cfg.pitch.hop(fs);

    let x = w.samples();
    let emphasized: Vec<f64> = (0..x.len())
        .map(|n| x[n] - if n > 0 { cfg.pre_emphasis * x[n - 1] } else { 0.0 })
        .collect();
    let window = hann(frame_len);
    let nyquist = fs as f64 / 2.0;

    let mut out = Vec::new();
    let mut frame = alloc::vec![0.0; frame_len];
    for (t, p) in pitch.frames.iter().enumerate() {
        if p.f0_hz.is_none() {
            continue;
        }
        let start = t * hop;
        for (i, (dst, w)) in frame.iter_mut().zip(&window).enumerate() {
            *dst = emphasized.get(start + i).copied().unwrap_or(0.0) * w;
        }
        let formants_hz = match lpc(&frame, order) {
            Ok(model) => {
                let env = lpc_envelope_db(&model.coefficients, cfg.grid_points);
                envelope_peaks(&env, nyquist, cfg.min_hz, cfg.count)
            }
            Err(_) => Vec::new(),
        };
        out.push(FormantFrame { time_s: p.time_s, formants_hz, lpc_order: order });
    }
    Ok(out)
}
