//! `EMOF` feature files.
//!
//! Layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `EMOF` |
//! | 4     | version `u32` = 1 |
//! | 4     | rows T `u32` |
//! | 4     | cols D `u32` |
//! | 4     | frame shift in microseconds `u32` |
//! | 1     | source tag (1 = ssl-layer9, 2 = mel-cepstrum) |
//! | 4·T·D | `f32` values, row-major |

use std::path::Path;

use emossl_core::{FeatureMatrix, FeatureSource};

use crate::binio::Cursor;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"EMOF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 21;

pub fn encode_features(m: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.values().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    let shift_us = (m.frame_shift_s() * 1e6).round() as u32;
    out.extend_from_slice(&shift_us.to_le_bytes());
    out.push(m.source().tag());
    for v in m.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(path: &Path, bytes: &[u8]) -> Result<FeatureMatrix> {
    let mut c = Cursor::new(path, bytes);
    c.magic(MAGIC)?;
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion { path: path.into(), version });
    }
    let rows = c.u32()?;
    let cols = c.u32()?;
    let shift_us = c.u32()?;
    let tag = c.u8()?;
    let source = FeatureSource::from_tag(tag).ok_or(Error::UnknownSourceTag { path: path.into(), tag })?;
    let count = (rows as usize)
        .checked_mul(cols as usize)
        .filter(|_| rows > 0 && cols > 0)
        .ok_or(Error::DimensionOverflow { path: path.into(), rows: rows as u64, cols: cols as u64 })?;
    let values = c.f32s(count)?;
    c.finish()?;
    Ok(FeatureMatrix::new(rows as usize, cols as usize, values, source, shift_us as f64 / 1e6)?)
}

pub fn write_features(path: impl AsRef<Path>, m: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    if m.rows() > u32::MAX as usize || m.cols() > u32::MAX as usize {
        return Err(Error::DimensionOverflow { path: path.into(), rows: m.rows() as u64, cols: m.cols() as u64 });
    }
    std::fs::write(path, encode_features(m)).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(path, &bytes)
}
