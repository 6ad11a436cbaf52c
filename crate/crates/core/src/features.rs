//! Waveforms and dense frame-level feature matrices.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Lowest sample rate the analysis routines accept.
pub const MIN_SAMPLE_RATE: u32 = 8000;

/// Mono audio with samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyWaveform);
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::SampleRateTooLow(sample_rate));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Where the rows of a [`FeatureMatrix`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSource {
    /// Hidden states of layer 9 of a self-supervised speech model.
    SslLayer9,
    /// Mel-frequency cepstra; column 0 holds the energy term.
    MelCepstrum,
}

impl FeatureSource {
    pub fn tag(self) -> u8 {
        match self {
            FeatureSource::SslLayer9 => 1,
            FeatureSource::MelCepstrum => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(FeatureSource::SslLayer9),
            2 => Some(FeatureSource::MelCepstrum),
            _ => None,
        }
    }
}

/// A `rows x cols` row-major matrix of finite `f32` values, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
    source: FeatureSource,
    frame_shift_s: f64,
}

impl FeatureMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        values: Vec<f32>,
        source: FeatureSource,
        frame_shift_s: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        Self::with_rows_allowed_empty(rows, cols, values, source, frame_shift_s)
    }

    /// Like [`FeatureMatrix::new`] but accepts zero rows. Only centroid
    /// lookups of empty token sequences produce such matrices.
    pub fn with_rows_allowed_empty(
        rows: usize,
        cols: usize,
        values: Vec<f32>,
        source: FeatureSource,
        frame_shift_s: f64,
    ) -> Result<Self> {
        if cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if rows.checked_mul(cols) != Some(values.len()) {
            return Err(Error::ShapeMismatch { rows, cols, len: values.len() });
        }
        if !(frame_shift_s > 0.0 && frame_shift_s.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "frame shift must be positive, got {frame_shift_s}"
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: i / cols, col: i % cols });
        }
        Ok(Self { rows, cols, values, source, frame_shift_s })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn source(&self) -> FeatureSource {
        self.source
    }

    pub fn frame_shift_s(&self) -> f64 {
        self.frame_shift_s
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.values[t * self.cols..(t + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    /// Copy with every row scaled to unit Euclidean norm (zero rows stay zero).
    pub fn l2_normalized(&self) -> Self {
        let mut values = self.values.clone();
        for row in values.chunks_exact_mut(self.cols) {
            let norm = libm::sqrt(row.iter().map(|&v| v as f64 * v as f64).sum::<f64>());
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v = (*v as f64 / norm) as f32);
            }
        }
        Self { values, ..self.clone() }
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }
}
