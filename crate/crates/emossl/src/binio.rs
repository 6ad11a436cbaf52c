//! Little-endian readers shared by the feature and codebook formats.

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        Self { path, bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(Error::Truncated {
            path: self.path.into(),
            expected: self.pos as u64 + n as u64,
            found: self.bytes.len() as u64,
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.take(4)?.try_into().unwrap();
        if found != expected {
            return Err(Error::BadMagic { path: self.path.into(), expected, found });
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// `count` little-endian f32 values, checking the length up front so a
    /// short file reports the full expected size.
    pub fn f32s(&mut self, count: usize) -> Result<Vec<f32>> {
        let need = count.checked_mul(4).ok_or(Error::DimensionOverflow {
            path: self.path.into(),
            rows: count as u64,
            cols: 4,
        })?;
        if self.bytes.len() - self.pos < need {
            return Err(Error::Truncated {
                path: self.path.into(),
                expected: (self.pos + need) as u64,
                found: self.bytes.len() as u64,
            });
        }
        Ok(self.take(need)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn finish(self) -> Result<()> {
        let extra = self.bytes.len() - self.pos;
        if extra > 0 {
            return Err(Error::TrailingBytes { path: self.path.into(), extra: extra as u64 });
        }
        Ok(())
    }
}
