//! Numeric abstraction shared by rewards, value tables and metrics.
//!
//! Everything that does arithmetic on rewards is generic over [`Scalar`], so
//! the same code runs on `f64` for simulation, `f32` for compact sweeps, and
//! exact rationals when a test needs bit-exact reward values.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// A signed, ordered number type usable as a reward / value unit.
pub trait Scalar:
    Num + Signed + PartialOrd + Copy + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts an integer payoff into this scalar type.
    fn from_points(points: i64) -> Self {
        Self::from_i64(points).expect("payoff points representable in scalar type")
    }

    /// Converts an `f64` parameter (learning rate, weights) into this type.
    ///
    /// Panics if the value cannot be represented, e.g. NaN into a rational.
    fn from_real(value: f64) -> Self {
        Self::from_f64(value).expect("real parameter representable in scalar type")
    }

    fn to_real(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl<T> Scalar for T where
    T: Num + Signed + PartialOrd + Copy + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}
