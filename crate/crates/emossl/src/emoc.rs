//! `EMOC` codebook files.
//!
//! Little-endian: magic `EMOC`, version `u32` = 1, K `u32`, D `u32`,
//! seed `u64`, language tag (`u8` length then UTF-8), inertia `f64`, then
//! K·D `f32` centroid values row-major.

use std::path::Path;

use emossl_core::vq::Codebook;

use crate::binio::Cursor;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"EMOC";
pub const VERSION: u32 = 1;

pub fn encode_codebook(cb: &Codebook) -> Result<Vec<u8>> {
    let lang = cb.language().as_bytes();
    if lang.len() > u8::MAX as usize {
        return Err(Error::InvalidCodebook {
            path: "<memory>".into(),
            message: format!("language tag is {} bytes; at most 255 fit", lang.len()),
        });
    }
    let mut out = Vec::with_capacity(33 + lang.len() + 4 * cb.centroids().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(cb.k() as u32).to_le_bytes());
    out.extend_from_slice(&(cb.dim() as u32).to_le_bytes());
    out.extend_from_slice(&cb.seed().to_le_bytes());
    out.push(lang.len() as u8);
    out.extend_from_slice(lang);
    out.extend_from_slice(&cb.inertia().to_le_bytes());
    for v in cb.centroids() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_codebook(path: &Path, bytes: &[u8]) -> Result<Codebook> {
    let mut c = Cursor::new(path, bytes);
    c.magic(MAGIC)?;
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion { path: path.into(), version });
    }
    let k = c.u32()?;
    let dim = c.u32()?;
    let seed = c.u64()?;
    let lang_len = c.u8()? as usize;
    let language = std::str::from_utf8(c.take(lang_len)?)
        .map_err(|_| Error::BadLanguageTag { path: path.into() })?
        .to_owned();
    let inertia = c.f64()?;
    let count = (k as usize)
        .checked_mul(dim as usize)
        .filter(|_| k > 0 && dim > 0)
        .ok_or(Error::DimensionOverflow { path: path.into(), rows: k as u64, cols: dim as u64 })?;
    let centroids = c.f32s(count)?;
    c.finish()?;
    Codebook::new(k as usize, dim as usize, centroids, language, inertia, seed)
        .map_err(|e| Error::InvalidCodebook { path: path.into(), message: e.to_string() })
}

pub fn save_codebook(path: impl AsRef<Path>, cb: &Codebook) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_codebook(cb).map_err(|e| match e {
        Error::InvalidCodebook { message, .. } => Error::InvalidCodebook { path: path.into(), message },
        other => other,
    })?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_codebook(path, &bytes)
}
