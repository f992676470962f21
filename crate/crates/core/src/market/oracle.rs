use rayon::prelude::*;

use super::dual::total;
use super::{Market, MarketSolution};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub const MAX_ORACLE_SOLVERS: usize = 3;

/// Brute-force primal solve by successively refined grids over the
/// allocations, stopping once the grid spacing is at most `grid_step`.
///
/// Each round evaluates a full tensor grid on the current box, then shrinks
/// the box to two cells around the best point. The objective is concave, so
/// the refinement cannot lose the maximizer by more than one cell.
pub fn direct_welfare_oracle<T: Real>(market: &Market<T>, grid_step: T) -> Result<MarketSolution<T>> {
    let d = market.solvers().len();
    if d > MAX_ORACLE_SOLVERS {
        return Err(Error::TooManySolvers {
            max: MAX_ORACLE_SOLVERS,
            got: d,
        });
    }
    if !(grid_step > T::zero()) {
        return Err(invalid("grid_step", "must be positive"));
    }
    let delta = market.delta();
    let finish = |x: Vec<T>| {
        let y = total(&x);
        MarketSolution {
            welfare: market.welfare(&x, y),
            price: market.cfmm().marginal(delta - y),
            routing: y,
            feasibility_gap: T::zero(),
            allocations: x,
        }
    };
    if d == 0 || delta == T::zero() {
        return Ok(finish(vec![T::zero(); d]));
    }

    let points = [4001usize, 401, 61][d - 1];
    let bound: Vec<T> = market.solvers().iter().map(|s| s.upper_bound().min(delta)).collect();
    let mut lo = vec![T::zero(); d];
    let mut hi = bound.clone();
    let objective = |x: &[T]| {
        let y = total(x);
        if y > delta {
            T::neg_infinity()
        } else {
            market.welfare(x, y)
        }
    };
    let mut best = vec![T::zero(); d];
    loop {
        let step: Vec<T> = (0..d)
            .map(|k| (hi[k] - lo[k]) / T::from_count(points as u64 - 1))
            .collect();
        let cells = points.pow(d as u32);
        let (_, ix) = (0..cells)
            .into_par_iter()
            .map(|i| {
                let mut x = vec![T::zero(); d];
                let mut rest = i;
                for k in 0..d {
                    x[k] = (lo[k] + step[k] * T::from_count((rest % points) as u64)).min(hi[k]);
                    rest /= points;
                }
                (objective(&x), i)
            })
            .reduce(
                || (T::neg_infinity(), usize::MAX),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        let mut rest = ix;
        for k in 0..d {
            best[k] = (lo[k] + step[k] * T::from_count((rest % points) as u64)).min(hi[k]);
            rest /= points;
        }
        let coarse = step.iter().fold(T::zero(), |m, &s| m.max(s));
        if coarse <= grid_step {
            break;
        }
        for k in 0..d {
            lo[k] = (best[k] - T::lit(2.0) * step[k]).max(T::zero());
            hi[k] = (best[k] + T::lit(2.0) * step[k]).min(bound[k]);
        }
    }
    Ok(finish(best))
}
