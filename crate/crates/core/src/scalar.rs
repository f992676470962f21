//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::distr::Open01;
use rand::Rng;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Precision loss is accepted for narrower types.
    fn lit(x: f64) -> Self;

    /// Converts a count.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).unwrap_or_else(Self::infinity)
    }

    /// Uniform draw on the open interval (0, 1), sampled natively in this precision.
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(Open01)
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(Open01)
    }
}

/// A value on the extended nonnegative half-line: finite, or a distinguished `+∞`.
///
/// Divergent profits and unbounded entry thresholds are reported through this
/// type rather than as a bare floating point infinity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extended<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Extended<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// Collapses to a plain float, mapping the divergent case to `T::infinity()`.
    pub fn to_float(self) -> T {
        match self {
            Extended::Finite(v) => v,
            Extended::Infinite => T::infinity(),
        }
    }
}

impl<T: Real> Display for Extended<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}
