//! Linear prediction by the autocorrelation method.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// All-pole model `x[n] ~ sum_k a_k x[n - k]`, `k = 1..=p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lpc {
    /// Prediction coefficients `a_1..a_p`.
    pub coefficients: Vec<f64>,
    /// Reflection coefficients `k_1..k_p`.
    pub reflection: Vec<f64>,
    /// Prediction error energy after each order, `E_0..E_p`.
    pub errors: Vec<f64>,
    /// `sqrt(E_p)`.
    pub gain: f64,
}

impl Lpc {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}

/// Biased autocorrelation `r[0..=max_lag]`.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| {
            if lag >= frame.len() {
                0.0
            } else {
                frame[lag..].iter().zip(frame).map(|(a, b)| a * b).sum()
            }
        })
        .collect()
}

/// Levinson-Durbin recursion for the Toeplitz normal equations built from
/// `r[0..=order]`.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<Lpc> {
    if r.len() <= order {
        return Err(Error::InvalidParameter(alloc::format!(
            "need {} autocorrelation lags, got {}",
            order + 1,
            r.len()
        )));
    }
    if !(r[0] > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut errors = Vec::with_capacity(order + 1);
    let mut e = r[0];
    errors.push(e);
    for i in 0..order {
        let acc = r[i + 1] - (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = acc / e;
        if !(k.abs() < 1.0) {
            return Err(Error::UnstableFilter { order: i + 1, value: k });
        }
        prev[..i].copy_from_slice(&a[..i]);
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        e *= 1.0 - k * k;
        reflection.push(k);
        errors.push(e);
    }
    Ok(Lpc { coefficients: a, reflection, errors, gain: libm::sqrt(e) })
}

/// LPC of an already windowed frame.
pub fn lpc(frame: &[f64], order: usize) -> Result<Lpc> {
    if order < 2 || frame.len() <= order {
        return Err(Error::InvalidParameter(alloc::format!(
            "need 2 <= order < frame length, got order {order} for {} samples",
            frame.len()
        )));
    }
    levinson_durbin(&autocorrelation(frame, order), order)
}
