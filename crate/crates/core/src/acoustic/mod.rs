//! Acoustic-quality and prosody analysis.

pub mod dtw;
pub mod formant;
pub mod lpc;
pub mod mcd;
pub mod pitch;

pub use dtw::{dtw_align, dtw_align_by, Alignment, FrameDistance};
pub use formant::{formants, FormantConfig, FormantFrame};
pub use lpc::{autocorrelation, levinson_durbin, lpc, Lpc};
pub use mcd::{mcd, MCD_SCALE};
pub use pitch::{estimate_f0, log_f0_rmse, PitchConfig, PitchFrame, PitchTrack};

/// Offset of the vertex of the parabola through `(-1, a)`, `(0, b)`, `(1, c)`.
pub(crate) fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        0.0
    } else {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    }
}
