//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Global adaptive strategy: the interval with the largest error estimate is
//! bisected until the summed estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights paired with XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of a quadrature: integral value and error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

/// Adaptive integrator configuration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for Quadrature<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10),
            rel_tol: T::zero(),
            max_intervals: 2_000,
        }
    }
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Option<(T, T, T)> {
    let two = T::lit(2.0);
    let center = (a + b) / two;
    let half = (b - a) / two;
    let fc = f(center);
    if !fc.is_finite() {
        return None;
    }
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    let mut abs_sum = fc.abs() * T::lit(WGK[7]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !f1.is_finite() || !f2.is_finite() {
            return None;
        }
        kron = kron + T::lit(WGK[j]) * (f1 + f2);
        abs_sum = abs_sum + T::lit(WGK[j]) * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    Some((value, error, abs_sum * half.abs()))
}

impl<T: Real> Quadrature<T> {
    pub fn with_tolerance(abs_tol: T) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: Fn(T) -> T>(&self, f: F, a: T, b: T) -> Result<Integral<T>> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrates over `[points[0], points[last]]`, seeding the adaptive
    /// scheme with the given (nondecreasing) breakpoints.
    pub fn integrate_with_breaks<F: Fn(T) -> T>(&self, f: F, points: &[T]) -> Result<Integral<T>> {
        let fail = |a: T, b: T, e: T| Error::QuadratureFailed {
            lower: a.to_f64_lossy(),
            upper: b.to_f64_lossy(),
            error: e.to_f64_lossy(),
        };
        if points.len() < 2 {
            return Ok(Integral {
                value: T::zero(),
                error: T::zero(),
                intervals: 0,
            });
        }
        let (lo, hi) = (points[0], points[points.len() - 1]);
        if lo == hi {
            return Ok(Integral {
                value: T::zero(),
                error: T::zero(),
                intervals: 0,
            });
        }

        let mut heap = BinaryHeap::new();
        let mut total = T::zero();
        let mut total_err = T::zero();
        let mut magnitude = T::zero();
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let (value, error, abs) = kronrod(&f, a, b).ok_or_else(|| fail(a, b, T::infinity()))?;
            total = total + value;
            total_err = total_err + error;
            magnitude = magnitude + abs;
            heap.push(Panel { a, b, value, error });
        }

        // Tolerance cannot go below what roundoff allows in this precision.
        let floor = T::lit(50.0) * T::epsilon() * magnitude;
        loop {
            let tol = self.abs_tol.max(self.rel_tol * total.abs()).max(floor);
            if total_err <= tol {
                break;
            }
            if heap.len() >= self.max_intervals {
                return Err(fail(lo, hi, total_err));
            }
            let worst = match heap.pop() {
                Some(p) => p,
                None => break,
            };
            let mid = (worst.a + worst.b) / T::lit(2.0);
            if mid <= worst.a || mid >= worst.b {
                // Interval cannot be split further in this precision.
                return Err(fail(worst.a, worst.b, total_err));
            }
            let (v1, e1, _) = kronrod(&f, worst.a, mid).ok_or_else(|| fail(worst.a, mid, T::infinity()))?;
            let (v2, e2, _) = kronrod(&f, mid, worst.b).ok_or_else(|| fail(mid, worst.b, T::infinity()))?;
            total = total - worst.value + v1 + v2;
            total_err = total_err - worst.error + e1 + e2;
            heap.push(Panel {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Panel {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }

        // Re-sum to shed drift from the incremental updates.
        let mut value = T::zero();
        let mut error = T::zero();
        let intervals = heap.len();
        for p in heap.into_iter() {
            value = value + p.value;
            error = error + p.error;
        }
        Ok(Integral {
            value,
            error,
            intervals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = Quadrature::<f64>::default();
        let r = q.integrate(|x| x.powi(20), 0.0, 1.0).unwrap();
        assert!((r.value - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn endpoint_singularity_in_derivative() {
        let q = Quadrature::<f64>::with_tolerance(1e-14);
        let r = q.integrate(|x| x.powf(0.3), 0.0, 0.7).unwrap();
        let exact = 0.7f64.powf(1.3) / 1.3;
        assert!((r.value - exact).abs() < 1e-13, "{} vs {}", r.value, exact);
    }

    #[test]
    fn breakpoints_and_long_ranges() {
        let q = Quadrature::<f64>::default();
        let pts: Vec<f64> = [0.0, 1.0, 10.0, 100.0, 1000.0].to_vec();
        let r = q.integrate_with_breaks(|x| (-x).exp(), &pts).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn empty_and_reversed_ranges() {
        let q = Quadrature::<f64>::default();
        assert_eq!(q.integrate(|x| x, 2.0, 2.0).unwrap().value, 0.0);
        assert_eq!(q.integrate_with_breaks(|x| x, &[1.0]).unwrap().value, 0.0);
    }

    #[test]
    fn non_finite_integrand_reported() {
        let q = Quadrature::<f64>::default();
        assert!(q.integrate(|x| 1.0 / x, 0.0, 1.0).is_err());
    }

    #[test]
    fn single_precision() {
        let q = Quadrature::<f32>::default();
        let r = q.integrate(|x| x.sin(), 0.0, std::f32::consts::PI).unwrap();
        assert!((r.value - 2.0).abs() < 1e-5);
    }
}
