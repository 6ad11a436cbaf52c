//! Numerical core of the emossl toolkit: spherical arousal/valence/dominance
//! emotion geometry, k-means tokenization of speech features, and objective
//! metrics for evaluating emotional speech synthesis.
//!
//! The crate is `no_std` and needs only `alloc`. Enabling the `parallel`
//! feature spreads the k-means assignment step over a rayon pool without
//! changing any result.

#![no_std]
#![forbid(unsafe_code)]
// NaN must fail these range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod acoustic;
pub mod dsp;
pub mod emotion;
pub mod error;
pub mod features;
pub mod sequence;
pub mod vq;

pub use error::{Error, Result};
pub use features::{FeatureMatrix, FeatureSource, Waveform};
