//! Sampling helpers shared by reset and sensor code.
//!
//! Draws always happen in `f64` and are converted to the working scalar
//! afterwards, so the consumed rng stream is identical for every scalar
//! width and a zero-width range reproduces its endpoint exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{real, Real};

/// Uniform draw from `[lo, hi]`. Always consumes one draw, even when `lo == hi`.
pub(crate) fn uniform<T: Real>(rng: &mut ChaCha8Rng, lo: T, hi: T) -> T {
    let x: f64 = rng.random_range(0.0..1.0);
    lo + (hi - lo) * real::<T>(x)
}

/// Zero-mean Gaussian draw with the given standard deviation.
pub(crate) fn normal<T: Real>(rng: &mut ChaCha8Rng, std: T) -> T {
    let z: f64 = rng.sample(StandardNormal);
    real::<T>(z) * std
}
