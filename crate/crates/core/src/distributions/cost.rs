use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Parameterization of an entry-cost law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CostFamily<T> {
    /// Uniform on `[0, 1]`.
    UniformUnit,
    Exponential { rate: T },
    /// Piecewise-linear CDF through `(cost, probability)` knots. The first knot
    /// must be `(0, 0)`; the CDF is flat after the last knot.
    Tabulated { points: Vec<(T, T)> },
}

/// A validated entry-cost distribution with a finite, strictly positive
/// density at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "CostFamily<T>",
    into = "CostFamily<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct CostDistribution<T: Real> {
    family: CostFamily<T>,
    density_at_zero: T,
}

impl<T: Real> TryFrom<CostFamily<T>> for CostDistribution<T> {
    type Error = Error;

    fn try_from(family: CostFamily<T>) -> Result<Self> {
        let density_at_zero = match &family {
            CostFamily::UniformUnit => T::one(),
            CostFamily::Exponential { rate } => {
                if !(rate.is_finite() && *rate > T::zero()) {
                    return Err(invalid("rate", format!("must be finite and positive, got {rate}")));
                }
                *rate
            }
            CostFamily::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(invalid("points", "need at least two knots"));
                }
                if points[0] != (T::zero(), T::zero()) {
                    return Err(invalid("points", "first knot must be (0, 0)"));
                }
                for w in points.windows(2) {
                    let ((x0, f0), (x1, f1)) = (w[0], w[1]);
                    if !(x1.is_finite() && x1 > x0) {
                        return Err(invalid("points", "costs must be finite and strictly increasing"));
                    }
                    if !(f1 >= f0 && f1 <= T::one()) {
                        return Err(invalid("points", "probabilities must be nondecreasing within [0, 1]"));
                    }
                }
                let slope = (points[1].1 - points[0].1) / (points[1].0 - points[0].0);
                if !(slope.is_finite() && slope > T::zero()) {
                    return Err(invalid("points", "density at zero must be finite and positive"));
                }
                slope
            }
        };
        Ok(Self {
            family,
            density_at_zero,
        })
    }
}

impl<T: Real> From<CostDistribution<T>> for CostFamily<T> {
    fn from(d: CostDistribution<T>) -> Self {
        d.family
    }
}

impl<T: Real> CostDistribution<T> {
    pub fn uniform_unit() -> Self {
        Self {
            family: CostFamily::UniformUnit,
            density_at_zero: T::one(),
        }
    }

    pub fn exponential(rate: T) -> Result<Self> {
        CostFamily::Exponential { rate }.try_into()
    }

    pub fn tabulated(points: Vec<(T, T)>) -> Result<Self> {
        CostFamily::Tabulated { points }.try_into()
    }

    pub fn family(&self) -> &CostFamily<T> {
        &self.family
    }

    /// `f_C(0)`.
    pub fn density_at_zero(&self) -> T {
        self.density_at_zero
    }

    pub fn cdf(&self, c: T) -> T {
        if c <= T::zero() {
            return T::zero();
        }
        match &self.family {
            CostFamily::UniformUnit => c.min(T::one()),
            CostFamily::Exponential { rate } => -(-*rate * c).exp_m1(),
            CostFamily::Tabulated { points } => {
                let last = points[points.len() - 1];
                if c >= last.0 {
                    return last.1;
                }
                let i = points.partition_point(|&(x, _)| x <= c);
                let ((x0, f0), (x1, f1)) = (points[i - 1], points[i]);
                f0 + (f1 - f0) * (c - x0) / (x1 - x0)
            }
        }
    }

    pub fn pdf(&self, c: T) -> T {
        if c < T::zero() {
            return T::zero();
        }
        match &self.family {
            CostFamily::UniformUnit => {
                if c <= T::one() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            CostFamily::Exponential { rate } => *rate * (-*rate * c).exp(),
            CostFamily::Tabulated { points } => {
                let last = points[points.len() - 1];
                if c >= last.0 {
                    return T::zero();
                }
                let i = points.partition_point(|&(x, _)| x <= c);
                let ((x0, f0), (x1, f1)) = (points[i - 1], points[i]);
                (f1 - f0) / (x1 - x0)
            }
        }
    }

    /// Probability mass of the whole law (1 unless a tabulated CDF stops short).
    pub fn total_mass(&self) -> T {
        match &self.family {
            CostFamily::Tabulated { points } => points[points.len() - 1].1,
            _ => T::one(),
        }
    }
}
