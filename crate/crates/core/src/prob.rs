//! Scalar plumbing for probabilities: exact rationals or floats.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

use crate::Rational;

/// A number type that can hold probabilities.
pub trait Probability: Clone + Debug + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync {
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count fits")
    }

    /// `1 / base^exp`.
    fn inv_pow(base: u64, exp: u64) -> Self {
        let b = Self::from_count(base);
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc * b.clone();
        }
        Self::one() / acc
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Probability for f64 {}
impl Probability for f32 {}
impl Probability for Rational {}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson<F: Float>(successes: u64, trials: u64, z: F) -> (F, F) {
    if trials == 0 {
        return (F::zero(), F::one());
    }
    let n = F::from(trials).expect("float");
    let p = F::from(successes).expect("float") / n;
    let two = F::one() + F::one();
    let four = two + two;
    let z2 = z * z;
    let denom = F::one() + z2 / n;
    let centre = (p + z2 / (two * n)) / denom;
    let half = z * (p * (F::one() - p) / n + z2 / (four * n * n)).sqrt() / denom;
    let lo = (centre - half).max(F::zero()).min(p);
    let hi = (centre + half).min(F::one()).max(p);
    (lo, hi)
}

/// Normal quantile for a two-sided 95% interval.
pub fn z95<F: Float>() -> F {
    F::from(1.959_963_984_540_054).expect("float")
}

/// Total variation distance between two distributions given as aligned
/// weight slices.
pub fn total_variation<P: Probability>(a: &[P], b: &[P]) -> P {
    assert_eq!(a.len(), b.len());
    let mut acc = P::zero();
    for (x, y) in a.iter().zip(b) {
        let d = if x > y { x.clone() - y.clone() } else { y.clone() - x.clone() };
        acc = acc + d;
    }
    acc / P::from_count(2)
}
