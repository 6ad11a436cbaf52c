//! Arousal/valence/dominance emotion space.
//!
//! Cartesian AVD points are re-expressed around a caller-supplied center as
//! spherical coordinates in the physics convention: `theta` is the polar
//! angle measured from the +dominance axis and `phi` the azimuth in the
//! arousal/valence plane. The radius carries emotional intensity and the
//! angles the emotional style direction.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// A point in arousal/valence/dominance space, nominally in `[-1, 1]^3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AvdVector {
    pub arousal: f64,
    pub valence: f64,
    pub dominance: f64,
}

impl AvdVector {
    pub const ORIGIN: AvdVector = AvdVector { arousal: 0.0, valence: 0.0, dominance: 0.0 };

    pub const fn new(arousal: f64, valence: f64, dominance: f64) -> Self {
        Self { arousal, valence, dominance }
    }

    pub fn is_finite(&self) -> bool {
        self.arousal.is_finite() && self.valence.is_finite() && self.dominance.is_finite()
    }

    /// True when any component leaves the nominal `[-1, 1]` range. Extractor
    /// outputs may legitimately do so; callers treat this as a warning.
    pub fn outside_nominal_range(&self) -> bool {
        self.to_array().iter().any(|c| !(-1.0..=1.0).contains(c))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.arousal, self.valence, self.dominance]
    }

    pub fn from_array([a, v, d]: [f64; 3]) -> Self {
        Self::new(a, v, d)
    }

    /// Affinely map each component from `[lo, hi]` onto `[-1, 1]`.
    /// Off by default; exposed for extractors with a different output range.
    pub fn rescale_to_unit_cube(self, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidParameter(alloc::format!(
                "rescale range must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        let map = |x: f64| 2.0 * (x - lo) / (hi - lo) - 1.0;
        Ok(Self::new(map(self.arousal), map(self.valence), map(self.dominance)))
    }

    fn sub(self, other: Self) -> Self {
        Self::new(self.arousal - other.arousal, self.valence - other.valence, self.dominance - other.dominance)
    }
}

/// Spherical form of an AVD point: intensity `r` plus style angles.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SphericalEmotion {
    pub r: f64,
    /// Polar angle in `[0, pi]`.
    pub theta: f64,
    /// Azimuth in `(-pi, pi]`.
    pub phi: f64,
}

impl SphericalEmotion {
    pub const ZERO: SphericalEmotion = SphericalEmotion { r: 0.0, theta: 0.0, phi: 0.0 };

    pub fn new(r: f64, theta: f64, phi: f64) -> Result<Self> {
        let s = Self { r, theta, phi };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("radius must be >= 0, got {}", self.r)));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::InvalidParameter(alloc::format!("theta must lie in [0, pi], got {}", self.theta)));
        }
        if !(self.phi > -PI && self.phi <= PI) {
            return Err(Error::InvalidParameter(alloc::format!("phi must lie in (-pi, pi], got {}", self.phi)));
        }
        Ok(())
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = libm::remainder(angle, TAU);
    if a <= -PI {
        a += TAU;
    }
    a
}

pub fn cartesian_to_spherical(p: AvdVector, center: AvdVector) -> SphericalEmotion {
    let q = p.sub(center);
    let r = libm::sqrt(q.arousal * q.arousal + q.valence * q.valence + q.dominance * q.dominance);
    if r == 0.0 {
        return SphericalEmotion::ZERO;
    }
    let theta = libm::acos((q.dominance / r).clamp(-1.0, 1.0));
    let phi = if q.arousal == 0.0 && q.valence == 0.0 {
        0.0
    } else {
        wrap_angle(libm::atan2(q.valence, q.arousal))
    };
    SphericalEmotion { r, theta, phi }
}

pub fn spherical_to_cartesian(s: SphericalEmotion, center: AvdVector) -> AvdVector {
    let (sin_t, cos_t) = libm::sincos(s.theta);
    let (sin_p, cos_p) = libm::sincos(s.phi);
    AvdVector::new(
        s.r * sin_t * cos_p + center.arousal,
        s.r * sin_t * sin_p + center.valence,
        s.r * cos_t + center.dominance,
    )
}

/// Spherical AVD fused with a one-hot emotion class.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionStyleVector {
    pub spherical: SphericalEmotion,
    pub class_onehot: Vec<f64>,
    /// `[r, theta, phi, onehot...]`, length `3 + C`.
    pub fused: Vec<f64>,
}

pub fn build_style_vector(s: SphericalEmotion, class_id: usize, classes: usize) -> Result<EmotionStyleVector> {
    if class_id >= classes {
        return Err(Error::ClassOutOfRange { class_id, classes });
    }
    let mut class_onehot = vec![0.0; classes];
    class_onehot[class_id] = 1.0;
    let mut fused = Vec::with_capacity(3 + classes);
    fused.extend_from_slice(&[s.r, s.theta, s.phi]);
    fused.extend_from_slice(&class_onehot);
    Ok(EmotionStyleVector { spherical: s, class_onehot, fused })
}

/// Blend two spherical emotions. Radius and polar angle move linearly;
/// the azimuth follows the shorter arc. `t = 0` and `t = 1` return the
/// endpoints unchanged.
pub fn interpolate(a: SphericalEmotion, b: SphericalEmotion, t: f64) -> Result<SphericalEmotion> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(alloc::format!("t must lie in [0, 1], got {t}")));
    }
    if t == 0.0 {
        return Ok(a);
    }
    if t == 1.0 {
        return Ok(b);
    }
    let mut b_phi = b.phi;
    let delta = b_phi - a.phi;
    if delta > PI {
        b_phi -= TAU;
    } else if delta < -PI {
        b_phi += TAU;
    }
    let lerp = |x: f64, y: f64| x + (y - x) * t;
    Ok(SphericalEmotion {
        r: lerp(a.r, b.r),
        theta: lerp(a.theta, b.theta),
        phi: wrap_angle(lerp(a.phi, b_phi)),
    })
}

pub fn scale_intensity(s: SphericalEmotion, k: f64) -> Result<SphericalEmotion> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("intensity scale must be >= 0, got {k}")));
    }
    if k == 0.0 {
        return Ok(SphericalEmotion::ZERO);
    }
    Ok(SphericalEmotion { r: s.r * k, ..s })
}

/// Per-emotion AVD RMSE, pooled over all three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionRmse {
    /// `(label, rmse, pair count)` in order of first appearance.
    pub per_emotion: Vec<(String, f64, usize)>,
    /// Unweighted mean of the per-emotion values.
    pub average: f64,
}

impl EmotionRmse {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.per_emotion.iter().find(|(l, _, _)| l == label).map(|(_, v, _)| *v)
    }
}

/// `RMSE_e = sqrt(sum of squared AVD differences / (3 N_e))` for each emotion,
/// and their unweighted mean.
pub fn avd_rmse_by_emotion<'a, I>(pairs: I) -> Result<EmotionRmse>
where
    I: IntoIterator<Item = (&'a str, AvdVector, AvdVector)>,
{
    let mut acc: Vec<(String, f64, usize)> = Vec::new();
    for (label, hyp, reference) in pairs {
        let sq: f64 = hyp
            .to_array()
            .iter()
            .zip(reference.to_array())
            .map(|(h, r)| (h - r) * (h - r))
            .sum();
        match acc.iter_mut().find(|(l, _, _)| l == label) {
            Some(entry) => {
                entry.1 += sq;
                entry.2 += 1;
            }
            None => acc.push((String::from(label), sq, 1)),
        }
    }
    if acc.is_empty() {
        return Err(Error::NoPairs);
    }
    for entry in acc.iter_mut() {
        entry.1 = libm::sqrt(entry.1 / (3 * entry.2) as f64);
    }
    let average = acc.iter().map(|e| e.1).sum::<f64>() / acc.len() as f64;
    Ok(EmotionRmse { per_emotion: acc, average })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pole_and_axis_cases() {
        let s = cartesian_to_spherical(AvdVector::new(0.0, 0.0, 1.0), AvdVector::ORIGIN);
        assert_eq!(s, SphericalEmotion { r: 1.0, theta: 0.0, phi: 0.0 });
        let s = cartesian_to_spherical(AvdVector::new(1.0, 0.0, 0.0), AvdVector::ORIGIN);
        assert_eq!(s.r, 1.0);
        assert!(close(s.theta, PI / 2.0, 1e-15));
        assert_eq!(s.phi, 0.0);
        assert_eq!(cartesian_to_spherical(AvdVector::new(0.3, 0.2, 0.1), AvdVector::new(0.3, 0.2, 0.1)), SphericalEmotion::ZERO);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn diagonal_point() {
        // sqrt(3), acos(1/sqrt(3)) and pi/4 to 15 significant digits
        let s = cartesian_to_spherical(AvdVector::new(1.0, 1.0, 1.0), AvdVector::ORIGIN);
        assert!(close(s.r, 1.732_050_807_568_877, 1e-12));
        assert!(close(s.theta, 0.955_316_618_124_509, 1e-12));
        assert!(close(s.phi, 0.785_398_163_397_448, 1e-12));
    }

    #[test]
    fn inverse_cases() {
        let p = spherical_to_cartesian(SphericalEmotion { r: 1.0, theta: 0.0, phi: 0.0 }, AvdVector::ORIGIN);
        assert_eq!(p, AvdVector::new(0.0, 0.0, 1.0));
        let c = AvdVector::new(0.1, -0.2, 0.3);
        assert_eq!(spherical_to_cartesian(SphericalEmotion::ZERO, c), c);
    }

    #[test]
    fn negative_azimuth_is_kept() {
        let s = cartesian_to_spherical(AvdVector::new(-1.0, -1e-300, 0.0), AvdVector::ORIGIN);
        assert!(s.phi > -PI && s.phi <= PI);
        let s = cartesian_to_spherical(AvdVector::new(-1.0, 0.0, 0.0), AvdVector::ORIGIN);
        assert_eq!(s.phi, PI);
    }

    #[test]
    fn style_vector() {
        let s = SphericalEmotion { r: 1.0, theta: 0.0, phi: 0.0 };
        let v = build_style_vector(s, 2, 4).unwrap();
        assert_eq!(v.fused, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(build_style_vector(s, 0, 1).unwrap().fused.len(), 4);
        assert_eq!(build_style_vector(s, 4, 4), Err(Error::ClassOutOfRange { class_id: 4, classes: 4 }));
    }

    #[test]
    fn interpolation_contract() {
        let a = SphericalEmotion { r: 0.5, theta: 1.0, phi: 3.0 };
        let b = SphericalEmotion { r: 1.5, theta: 2.0, phi: -3.0 };
        assert_eq!(interpolate(a, a, 0.37).unwrap(), a);
        assert_eq!(interpolate(a, b, 0.0).unwrap(), a);
        assert_eq!(interpolate(a, b, 1.0).unwrap(), b);
        // -3 unwraps to 2pi - 3; midpoint is pi, on the boundary rather than 0
        let mid = interpolate(a, b, 0.5).unwrap();
        assert!(close(mid.phi.abs(), PI, 1e-12));
        assert!(close(mid.r, 1.0, 1e-15));
        assert!(interpolate(a, b, 1.5).is_err());
        assert!(interpolate(a, b, -0.1).is_err());
    }

    #[test]
    fn intensity_scaling() {
        let s = SphericalEmotion { r: 2.0, theta: 1.0, phi: 1.0 };
        assert_eq!(scale_intensity(s, 1.0).unwrap(), s);
        assert_eq!(scale_intensity(s, 0.5).unwrap(), SphericalEmotion { r: 1.0, theta: 1.0, phi: 1.0 });
        assert_eq!(scale_intensity(s, 0.0).unwrap(), SphericalEmotion::ZERO);
        assert!(scale_intensity(s, -1.0).is_err());
    }

    #[test]
    fn spherical_validation() {
        assert!(SphericalEmotion::new(1.0, 0.5, PI).is_ok());
        assert!(SphericalEmotion::new(1.0, 0.5, -PI).is_err());
        assert!(SphericalEmotion::new(-1.0, 0.5, 0.0).is_err());
        assert!(SphericalEmotion::new(1.0, 4.0, 0.0).is_err());
    }

    #[test]
    fn rmse_examples() {
        let same = AvdVector::new(0.1, 0.2, 0.3);
        let r = avd_rmse_by_emotion([("Happy", same, same), ("Sad", same, same)]).unwrap();
        assert_eq!(r.average, 0.0);
        let r = avd_rmse_by_emotion([("Happy", AvdVector::new(0.2, 0.2, 0.3), same)]).unwrap();
        assert!(close(r.get("Happy").unwrap(), libm::sqrt(0.01 / 3.0), 1e-9));
        assert_eq!(avd_rmse_by_emotion(core::iter::empty()), Err(Error::NoPairs));
    }

    #[test]
    fn nominal_range_and_rescale() {
        assert!(!AvdVector::new(1.0, -1.0, 0.0).outside_nominal_range());
        assert!(AvdVector::new(1.2, 0.0, 0.0).outside_nominal_range());
        let p = AvdVector::new(0.0, 0.5, 1.0).rescale_to_unit_cube(0.0, 1.0).unwrap();
        assert_eq!(p, AvdVector::new(-1.0, 0.0, 1.0));
    }

    fn avd() -> impl Strategy<Value = AvdVector> {
        (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, v, d)| AvdVector::new(a, v, d))
    }

    fn spherical() -> impl Strategy<Value = SphericalEmotion> {
        (0.0f64..3.0, 0.0f64..=PI, -PI + 1e-12..=PI).prop_map(|(r, theta, phi)| SphericalEmotion { r, theta, phi })
    }

    proptest! {
        #[test]
        fn round_trip(p in avd(), c in avd()) {
            let s = cartesian_to_spherical(p, c);
            prop_assume!(s.r > 1e-12);
            let back = spherical_to_cartesian(s, c);
            for (x, y) in p.to_array().iter().zip(back.to_array()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn radius_invariant_under_rotation(p in avd(), c in avd(), yaw in -PI..PI, pitch in -PI..PI) {
            let q = p.sub(c).to_array();
            // rotate the centered offset about dominance then arousal
            let (sy, cy) = libm::sincos(yaw);
            let (sp, cp) = libm::sincos(pitch);
            let r1 = [cy * q[0] - sy * q[1], sy * q[0] + cy * q[1], q[2]];
            let r2 = [r1[0], cp * r1[1] - sp * r1[2], sp * r1[1] + cp * r1[2]];
            let rotated = AvdVector::new(c.arousal + r2[0], c.valence + r2[1], c.dominance + r2[2]);
            let a = cartesian_to_spherical(p, c).r;
            let b = cartesian_to_spherical(rotated, c).r;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn scaling_composes(s in spherical(), k1 in 0.01f64..4.0, k2 in 0.01f64..4.0) {
            let once = scale_intensity(s, k1 * k2).unwrap();
            let twice = scale_intensity(scale_intensity(s, k1).unwrap(), k2).unwrap();
            prop_assert_eq!(once.theta, twice.theta);
            prop_assert_eq!(once.phi, twice.phi);
            prop_assert!((once.r - twice.r).abs() <= 4.0 * f64::EPSILON * once.r.max(1e-300));
        }

        #[test]
        fn interpolation_is_angle_continuous(a in spherical(), b in spherical(), t in 0.0f64..0.999) {
            let eps = 1e-3;
            let p0 = interpolate(a, b, t).unwrap().phi;
            let p1 = interpolate(a, b, t + eps).unwrap().phi;
            let arc = wrap_angle(p1 - p0).abs();
            prop_assert!(arc <= eps * PI + 1e-9);
        }

        #[test]
        fn rmse_matches_flat_recomputation(
            rows in proptest::collection::vec((0usize..3, avd(), avd()), 1..40)
        ) {
            let labels = ["Angry", "Happy", "Sad"];
            let got = avd_rmse_by_emotion(rows.iter().map(|(l, h, r)| (labels[*l], *h, *r))).unwrap();
            let mut means = Vec::new();
            for (li, label) in labels.iter().enumerate() {
                let flat: Vec<f64> = rows
                    .iter()
                    .filter(|(l, _, _)| *l == li)
                    .flat_map(|(_, h, r)| {
                        let (h, r) = (h.to_array(), r.to_array());
                        [h[0] - r[0], h[1] - r[1], h[2] - r[2]]
                    })
                    .collect();
                if flat.is_empty() {
                    prop_assert!(got.get(label).is_none());
                    continue;
                }
                let expect = libm::sqrt(flat.iter().map(|e| e * e).sum::<f64>() / flat.len() as f64);
                prop_assert!((got.get(label).unwrap() - expect).abs() < 1e-12);
                means.push(expect);
            }
            let avg = means.iter().sum::<f64>() / means.len() as f64;
            prop_assert!((got.average - avg).abs() < 1e-12);
        }
    }
}
