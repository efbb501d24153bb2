use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A field the transition-law formulas can be evaluated in.
///
/// Implemented for `f32`, `f64` and [`BigRational`]. All formulas in
/// [`crate::ra_chain`] only need field operations on small integer constants,
/// so the rational instantiation is exact.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_count(value: u128) -> Self;

    fn ratio(numerator: u128, denominator: u128) -> Self {
        Self::from_count(numerator) / Self::from_count(denominator)
    }

    /// Nearest `f64`, used when exact values are reported.
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_count(value: u128) -> Self {
        value as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_count(value: u128) -> Self {
        value as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for BigRational {
    fn from_count(value: u128) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }

    fn to_f64(&self) -> f64 {
        crate::numeric::big_ratio_to_f64(self.numer(), self.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_exact_for_rationals() {
        let third = BigRational::ratio(1, 3);
        assert_eq!(third.clone() + third.clone() + third, BigRational::one());
    }

    #[test]
    fn float_instantiations_agree() {
        assert_eq!(<f64 as Scalar>::ratio(4, 5), 0.8);
        assert!((<f32 as Scalar>::ratio(4, 5) - 0.8f32).abs() < 1e-7);
        assert_eq!(BigRational::ratio(4, 5).to_f64(), 0.8);
    }
}
