//! File formats, batch evaluation and reporting around `emossl-core`.

pub mod emoc;
pub mod emof;
pub mod error;
pub mod evaluate;
pub mod export;
pub mod manifest;
pub mod report;
pub mod tokens;
pub mod wav;

mod binio;

pub use error::{Error, Result};
