//! Mel-cepstral distortion in dB over a DTW alignment.

use crate::acoustic::dtw::dtw_align_by;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// `(10 / ln 10) * sqrt(2)`: dB per unit Euclidean cepstral distance.
pub const MCD_SCALE: f64 = 10.0 / core::f64::consts::LN_10 * core::f64::consts::SQRT_2;

fn distance(a: &[f32], b: &[f32]) -> f64 {
    libm::sqrt(
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                let d = x as f64 - y as f64;
                d * d
            })
            .sum(),
    )
}

/// Mean per-frame MCD along the DTW path between two mel-cepstrum matrices.
/// Coefficient 0 is left out of both the alignment and the distance unless
/// `use_c0` is set.
pub fn mcd(reference: &FeatureMatrix, hypothesis: &FeatureMatrix, use_c0: bool) -> Result<f64> {
    if reference.cols() != hypothesis.cols() {
        return Err(Error::DimensionMismatch(reference.cols(), hypothesis.cols()));
    }
    let start = usize::from(!use_c0);
    if reference.cols() <= start {
        return Err(Error::InvalidParameter("MCD needs at least one cepstral coefficient besides c0".into()));
    }
    let align = dtw_align_by(reference.rows(), hypothesis.rows(), |i, j| {
        distance(&reference.row(i)[start..], &hypothesis.row(j)[start..])
    })?;
    Ok(MCD_SCALE * align.cost / align.path.len() as f64)
}
