//! 16-bit PCM mono WAV input and output.

use std::path::Path;

use emossl_core::Waveform;

use crate::error::{Error, Result};

/// Read a RIFF PCM16 mono file, scaling samples by `1 / 32768`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(source) => Error::io(path, source),
        hound::Error::Unsupported => Error::UnsupportedFormat { path: path.into(), found: "unsupported encoding".into() },
        other => Error::MalformedWav { path: path.into(), message: other.to_string() },
    })?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 || spec.channels != 1 {
        let kind = match spec.sample_format {
            hound::SampleFormat::Int => "PCM",
            hound::SampleFormat::Float => "float",
        };
        return Err(Error::UnsupportedFormat {
            path: path.into(),
            found: format!("{kind} {}-bit, {} channel(s), {} Hz", spec.bits_per_sample, spec.channels, spec.sample_rate),
        });
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::MalformedWav { path: path.into(), message: e.to_string() })?;
    Ok(Waveform::new(samples, spec.sample_rate)?)
}

/// Write samples as PCM16 mono, clamping to `[-1, 1]` and rounding.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec { channels: 1, sample_rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(source) => Error::io(path, source),
        other => Error::MalformedWav { path: path.into(), message: other.to_string() },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}
