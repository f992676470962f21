//! Derivative-free bracketing root finder.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Outcome of a bisection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub x: T,
    /// Function value at `x`.
    pub residual: T,
    pub iterations: usize,
}

/// Bisection for a root of a monotone function on `[lo, hi]`.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs (or one of them to be
/// zero). Iterates until the bracket collapses to adjacent floats, `|f| <= ftol`,
/// or `max_iter` halvings have run.
pub fn bisect<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    lo: T,
    hi: T,
    ftol: T,
    max_iter: usize,
) -> Result<Root<T>> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == T::zero() {
        return Ok(Root {
            x: a,
            residual: fa,
            iterations: 0,
        });
    }
    if fb == T::zero() {
        return Ok(Root {
            x: b,
            residual: fb,
            iterations: 0,
        });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NotBracketed {
            lower: lo.to_f64_lossy(),
            upper: hi.to_f64_lossy(),
        });
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for it in 1..=max_iter {
        let m = a + (b - a) / T::lit(2.0);
        if m <= a || m >= b {
            return Ok(Root {
                x: best.0,
                residual: best.1,
                iterations: it,
            });
        }
        let fm = f(m);
        if fm.abs() < best.1.abs() {
            best = (m, fm);
        }
        if fm == T::zero() || fm.abs() <= ftol {
            return Ok(Root {
                x: m,
                residual: fm,
                iterations: it,
            });
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(Root {
        x: best.0,
        residual: best.1,
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 0.0, 200).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decreasing_function() {
        let r = bisect(|x: f64| 1.0 - x, 0.0, 3.0, 0.0, 200).unwrap();
        assert!((r.x - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unbracketed() {
        assert!(matches!(
            bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 0.0, 50),
            Err(Error::NotBracketed { .. })
        ));
    }

    #[test]
    fn endpoint_root() {
        let r = bisect(|x: f64| x, 0.0, 1.0, 0.0, 10).unwrap();
        assert_eq!(r.x, 0.0);
        assert_eq!(r.iterations, 0);
    }
}
