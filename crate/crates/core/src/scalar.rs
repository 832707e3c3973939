//! Scalar abstractions.
//!
//! Exact computations (profile DP, enumeration oracles, Bernoulli
//! convolutions) only need field arithmetic, so they are generic over
//! [`Weight`], which covers `f32`, `f64` and exact [`BigRational`]s.
//! Special functions need transcendental operations and are generic over
//! [`Real`] instead.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Field element usable as a probability weight.
pub trait Weight: Clone + Debug + PartialOrd + NumAssign + Send + Sync + 'static {
    /// `num / den` in this scalar type. `den` must be nonzero.
    fn from_ratio(num: u64, den: u64) -> Self;

    fn from_count(n: u64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn to_f64(&self) -> f64;

    /// Mass small enough to drop from a dense support. Never true for exact scalars.
    fn is_negligible(&self) -> bool {
        false
    }
}

macro_rules! float_weight {
    ($t:ty) => {
        impl Weight for $t {
            fn from_ratio(num: u64, den: u64) -> Self {
                (num as f64 / den as f64) as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn is_negligible(&self) -> bool {
                (*self as f64).abs() < 1e-15
            }
        }
    };
}

float_weight!(f32);
float_weight!(f64);

impl Weight for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Floating-point scalar with the special functions the statistics need.
pub trait Real: Float + FloatConst + FromPrimitive + Weight {
    fn erfc(self) -> Self;
    fn ln_gamma(self) -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f64 {
    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    fn ln_gamma(self) -> Self {
        libm::lgamma(self)
    }
}

impl Real for f32 {
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    fn ln_gamma(self) -> Self {
        libm::lgammaf(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_agree_across_scalars() {
        let exact = BigRational::from_ratio(17, 6);
        assert_eq!(exact, BigRational::new(17.into(), 6.into()));
        assert!((Weight::to_f64(&exact) - 17.0 / 6.0).abs() < 1e-15);
        assert!((f32::from_ratio(1, 3) - 1.0 / 3.0).abs() < 1e-7);
        assert!(!BigRational::from_ratio(1, u64::MAX).is_negligible());
        assert!(1e-16f64.is_negligible());
    }
}
