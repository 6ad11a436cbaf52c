//! Fundamental-frequency tracking by normalized autocorrelation.
//!
//! For every frame the segment starting at the frame is compared with the
//! segment `lag` samples later, for lags spanning `[fs/fmax, fs/fmin]`. The
//! comparison is the normalized cross-correlation of the two segments, each
//! `fs/fmin` samples long. A frame is voiced when its RMS is at least the
//! energy floor and the correlation peak reaches the voicing threshold.

use alloc::vec::Vec;

use crate::acoustic::parabolic_offset;
use crate::error::{Error, Result};
use crate::features::Waveform;

/// Candidate peaks must reach this fraction of the strongest correlation;
/// the shortest qualifying lag wins, which keeps period multiples from
/// being reported as the pitch.
const PEAK_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchConfig {
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub frame_shift_s: f64,
    pub voicing_threshold: f64,
    pub energy_floor: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self { fmin_hz: 50.0, fmax_hz: 600.0, frame_shift_s: 0.010, voicing_threshold: 0.3, energy_floor: 1e-4 }
    }
}

impl PitchConfig {
    fn validate(&self, sample_rate: u32) -> Result<()> {
        if !(self.fmin_hz > 0.0 && self.fmax_hz > self.fmin_hz) {
            return Err(Error::InvalidParameter(alloc::format!(
                "need 0 < fmin < fmax, got {} and {}",
                self.fmin_hz,
                self.fmax_hz
            )));
        }
        if !(self.frame_shift_s > 0.0) || libm::round(self.frame_shift_s * sample_rate as f64) < 1.0 {
            return Err(Error::InvalidParameter(alloc::format!("invalid frame shift {}", self.frame_shift_s)));
        }
        if (sample_rate as f64) < 4.0 * self.fmax_hz {
            return Err(Error::InvalidParameter(alloc::format!(
                "sample rate {sample_rate} Hz is too low for fmax {} Hz",
                self.fmax_hz
            )));
        }
        Ok(())
    }

    pub(crate) fn hop(&self, sample_rate: u32) -> usize {
        libm::round(self.frame_shift_s * sample_rate as f64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchFrame {
    pub time_s: f64,
    /// `None` for unvoiced frames.
    pub f0_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    pub frames: Vec<PitchFrame>,
    pub frame_shift_s: f64,
}

impl PitchTrack {
    pub fn voiced_count(&self) -> usize {
        self.frames.iter().filter(|f| f.f0_hz.is_some()).count()
    }
}

fn sample(x: &[f64], i: usize) -> f64 {
    x.get(i).copied().unwrap_or(0.0)
}

/// Normalized cross-correlation between `x[start..start+len]` and the
/// segment `lag` samples later (zero beyond the end of the signal).
fn ncc(x: &[f64], start: usize, len: usize, lag: usize, energy0: f64) -> f64 {
    let mut dot = 0.0;
    let mut energy = 0.0;
    for n in start..start + len {
        let y = sample(x, n + lag);
        dot += sample(x, n) * y;
        energy += y * y;
    }
    let denom = libm::sqrt(energy0 * energy);
    if denom > 0.0 {
        dot / denom
    } else {
        0.0
    }
}

pub fn estimate_f0(w: &Waveform, cfg: &PitchConfig) -> Result<PitchTrack> {
    let fs = w.sample_rate();
    cfg.validate(fs)?;
    let x = w.samples();
    let hop = cfg.hop(fs);
    let min_lag = libm::ceil(fs as f64 / cfg.fmax_hz) as usize;
    let max_lag = libm::floor(fs as f64 / cfg.fmin_hz) as usize;
    let window = max_lag;
    let n_frames = x.len().div_ceil(hop).max(1);

    let mut frames = Vec::with_capacity(n_frames);
    let mut corr = Vec::with_capacity(max_lag + 2);
    for t in 0..n_frames {
        let start = t * hop;
        let time_s = (start as f64) / fs as f64;
        let energy0: f64 = (start..start + window).map(|n| sample(x, n) * sample(x, n)).sum();
        let rms = libm::sqrt(energy0 / window as f64);
        if rms < cfg.energy_floor {
            frames.push(PitchFrame { time_s, f0_hz: None });
            continue;
        }
        // one extra lag on each side for the parabolic fit
        corr.clear();
        corr.extend((min_lag - 1..=max_lag + 1).map(|lag| ncc(x, start, window, lag, energy0)));
        let at = |lag: usize| corr[lag + 1 - min_lag];
        let peak = (min_lag..=max_lag).map(at).fold(f64::NEG_INFINITY, f64::max);
        if peak < cfg.voicing_threshold {
            frames.push(PitchFrame { time_s, f0_hz: None });
            continue;
        }
        let chosen = (min_lag..=max_lag)
            .find(|&lag| {
                let v = at(lag);
                v >= PEAK_FRACTION * peak && v >= at(lag - 1) && v >= at(lag + 1)
            })
            .unwrap_or(min_lag);
        let refined = chosen as f64 + parabolic_offset(at(chosen - 1), at(chosen), at(chosen + 1));
        let f0 = fs as f64 / refined;
        let f0_hz = (cfg.fmin_hz..=cfg.fmax_hz).contains(&f0).then_some(f0);
        frames.push(PitchFrame { time_s, f0_hz });
    }
    Ok(PitchTrack { frames, frame_shift_s: hop as f64 / fs as f64 })
}

/// RMSE of natural-log F0 over frames voiced in both tracks, pairing frames
/// by index (both tracks share a frame shift and start at time zero).
pub fn log_f0_rmse(reference: &PitchTrack, hypothesis: &PitchTrack) -> Result<f64> {
    let (a, b) = (reference.frame_shift_s, hypothesis.frame_shift_s);
    if (a - b).abs() > 1e-9 * a.abs().max(b.abs()) {
        return Err(Error::FrameShiftMismatch(a, b));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (r, h) in reference.frames.iter().zip(&hypothesis.frames) {
        if let (Some(fr), Some(fh)) = (r.f0_hz, h.f0_hz) {
            let d = libm::log(fh) - libm::log(fr);
            sum += d * d;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoCoVoicedFrames);
    }
    Ok(libm::sqrt(sum / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};

    fn tone(freq: f64, fs: u32, secs: f64) -> Waveform {
        let n = (fs as f64 * secs) as usize;
        Waveform::new((0..n).map(|i| 0.5 * libm::sin(2.0 * PI * freq * i as f64 / fs as f64)).collect(), fs).unwrap()
    }

    fn interior(track: &PitchTrack) -> &[PitchFrame] {
        let n = track.frames.len();
        &track.frames[5..n - 5]
    }

    #[test]
    fn tone_220() {
        let track = estimate_f0(&tone(220.0, 16000, 1.0), &PitchConfig::default()).unwrap();
        assert_eq!(track.frames.len(), 100);
        for f in interior(&track) {
            let f0 = f.f0_hz.expect("voiced");
            assert!((f0 - 220.0).abs() <= 2.0, "{f0}");
        }
        assert!(track.frames.windows(2).all(|w| w[0].time_s < w[1].time_s));
    }

    #[test]
    fn tones_within_one_percent() {
        for freq in [80.0, 100.0, 150.0, 220.0, 330.0, 400.0] {
            let track = estimate_f0(&tone(freq, 16000, 0.5), &PitchConfig::default()).unwrap();
            for f in interior(&track) {
                let f0 = f.f0_hz.expect("voiced");
                assert!((f0 - freq).abs() / freq < 0.01, "{freq}: {f0}");
            }
        }
    }

    #[test]
    fn silence_is_unvoiced() {
        let w = Waveform::new(vec![0.0; 16000], 16000).unwrap();
        let track = estimate_f0(&w, &PitchConfig::default()).unwrap();
        assert_eq!(track.voiced_count(), 0);
    }

    #[test]
    fn white_noise_is_mostly_unvoiced() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
        let w = Waveform::new((0..16000).map(|_| rng.random_range(-0.5..0.5)).collect(), 16000).unwrap();
        let track = estimate_f0(&w, &PitchConfig::default()).unwrap();
        let unvoiced = track.frames.len() - track.voiced_count();
        assert!(unvoiced as f64 >= 0.9 * track.frames.len() as f64, "{unvoiced}/{}", track.frames.len());
    }

    #[test]
    fn rejects_bad_config() {
        let w = tone(100.0, 8000, 0.1);
        let cfg = PitchConfig { fmax_hz: 3000.0, ..Default::default() };
        assert!(estimate_f0(&w, &cfg).is_err());
        let cfg = PitchConfig { fmin_hz: 700.0, ..Default::default() };
        assert!(estimate_f0(&w, &cfg).is_err());
    }

    fn track(f0: &[Option<f64>]) -> PitchTrack {
        PitchTrack {
            frames: f0.iter().enumerate().map(|(i, &f0_hz)| PitchFrame { time_s: i as f64 * 0.01, f0_hz }).collect(),
            frame_shift_s: 0.01,
        }
    }

    #[test]
    fn log_f0_rmse_cases() {
        let r = track(&[Some(100.0), None, Some(200.0), Some(150.0)]);
        assert_eq!(log_f0_rmse(&r, &r).unwrap(), 0.0);
        let doubled = track(&[Some(200.0), None, Some(400.0), Some(300.0)]);
        assert!((log_f0_rmse(&r, &doubled).unwrap() - core::f64::consts::LN_2).abs() < 1e-12);
        let silent = track(&[None, None, None, None]);
        assert_eq!(log_f0_rmse(&silent, &r), Err(Error::NoCoVoicedFrames));
        let other = PitchTrack { frame_shift_s: 0.005, ..r.clone() };
        assert!(matches!(log_f0_rmse(&r, &other), Err(Error::FrameShiftMismatch(..))));
    }

    #[test]
    fn unvoiced_in_one_track_is_skipped() {
        let r = track(&[Some(100.0), Some(100.0)]);
        let h = track(&[Some(100.0), None]);
        assert_eq!(log_f0_rmse(&r, &h).unwrap(), 0.0);
    }
}
