//! Floating-point abstraction shared by every estimator in the crate.
//!
//! All statistics, EM updates and Gibbs draws are written against [`Scalar`], so
//! the same code runs in `f64` (the default used by the CLI) or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};
use serde::Serialize;

/// Real scalar type usable by the estimators.
///
/// Besides arithmetic, a scalar knows how to draw the two primitive random
/// variates the samplers need: a uniform on (0, 1) and a unit-scale gamma.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Uniform draw on the open interval (0, 1).
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from Gamma(shape, 1). `shape` must be positive and finite.
    fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Self;

    /// Lossless-enough conversion from a count.
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable as float")
    }

    /// Conversion from an `f64` constant.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 representable as scalar")
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Self {
                Gamma::new(shape, 1.0)
                    .expect("gamma shape must be positive")
                    .sample(rng)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Sum of values after sorting them, so the result does not depend on the
/// order the values arrive in.
pub(crate) fn order_free_sum<T: Scalar>(values: &[T]) -> T {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sorted.into_iter().fold(T::zero(), |acc, v| acc + v)
}

/// Linear-interpolation quantile (the "type 7" rule) of already sorted data.
pub(crate) fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = T::lit(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Draw an index from unnormalized non-negative weights.
pub(crate) fn sample_categorical<T: Scalar, R: Rng + ?Sized>(rng: &mut R, weights: &[T]) -> usize {
    let total: T = weights.iter().copied().fold(T::zero(), |a, b| a + b);
    let target = T::sample_open01(rng) * total;
    let mut acc = T::zero();
    let mut last_positive = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > T::zero() {
            last_positive = k;
        }
        acc = acc + w;
        if target < acc {
            return k;
        }
    }
    last_positive
}

/// Dirichlet draw via normalized gammas.
pub(crate) fn sample_dirichlet<T: Scalar, R: Rng + ?Sized>(rng: &mut R, alpha: &[T], out: &mut [T]) {
    let tiny = T::min_positive_value();
    let mut total = T::zero();
    for (o, &a) in out.iter_mut().zip(alpha) {
        *o = T::sample_gamma(rng, a).max(tiny);
        total = total + *o;
    }
    for o in out.iter_mut() {
        *o = *o / total;
    }
}

/// Beta draw via two gammas, kept strictly inside (0, 1).
pub(crate) fn sample_beta<T: Scalar, R: Rng + ?Sized>(rng: &mut R, a: T, b: T) -> T {
    let tiny = T::min_positive_value();
    let x = T::sample_gamma(rng, a).max(tiny);
    let y = T::sample_gamma(rng, b).max(tiny);
    let eps = T::epsilon();
    (x / (x + y)).max(eps).min(T::one() - eps)
}

/// `ln Σ exp(x)` computed stably; the input is overwritten with normalized
/// probabilities.
pub(crate) fn normalize_log_weights<T: Scalar>(logw: &mut [T]) -> T {
    let max = logw.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    let mut total = T::zero();
    for w in logw.iter_mut() {
        *w = (*w - max).exp();
        total = total + *w;
    }
    for w in logw.iter_mut() {
        *w = *w / total;
    }
    max + total.ln()
}

/// Index of the largest value; the lowest index wins exact ties.
pub(crate) fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = k;
        }
    }
    best
}
