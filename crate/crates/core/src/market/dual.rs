use serde::{Deserialize, Serialize};

use super::{Market, MarketSolution};
use crate::error::{invalid, Result};
use crate::scalar::{CompensatedSum, Real};

/// Dual function and its derivative at one price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint<T> {
    pub price: T,
    /// `h(ν)`
    pub value: T,
    /// `h'(ν) = ỹ - Σ x̃`
    pub gradient: T,
    pub allocations: Vec<T>,
    pub routing: T,
}

pub(crate) fn total<T: Real>(xs: &[T]) -> T {
    let mut s = CompensatedSum::new();
    xs.iter().for_each(|&x| s.add(x));
    let v = s.value();
    if v.is_finite() {
        v
    } else {
        xs.iter().fold(T::zero(), |a, &x| a + x)
    }
}

pub fn dual_value_and_gradient<T: Real>(market: &Market<T>, nu: T) -> Result<DualPoint<T>> {
    if !(nu >= T::zero()) {
        return Err(invalid("nu", "must be nonnegative"));
    }
    let delta = market.delta();
    let routing = market.cfmm().user_best_response(delta, nu);
    let allocations: Vec<T> = market.solvers().iter().map(|s| s.best_response(nu)).collect();
    let mut value = market.cfmm().user_objective(delta, routing, nu);
    for (s, &x) in market.solvers().iter().zip(&allocations) {
        value = value + s.surplus(x) - nu * x;
    }
    Ok(DualPoint {
        price: nu,
        value,
        gradient: routing - total(&allocations),
        allocations,
        routing,
    })
}

/// One step of the descending-price search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket<T> {
    pub lower: T,
    pub upper: T,
    /// Price announced at this step.
    pub price: T,
    /// `h'` at that price.
    pub gradient: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Both the pool and at least one solver fill part of the order.
    Interior,
    /// Everything goes through the pool.
    AllCfmm,
    /// Solvers fill the whole order.
    AllSolver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome<T> {
    pub solution: MarketSolution<T>,
    pub outcome: Outcome,
    pub dual_value: T,
    /// `|h(ν*) - welfare|`
    pub duality_gap: T,
    pub transcript: Vec<Bracket<T>>,
}

pub(crate) fn gradient_tolerance<T: Real>(delta: T) -> T {
    T::lit(1e-11) * T::one().max(delta)
}

/// Descends from `opening` towards the zero of the nondecreasing map `grad`,
/// recording each announced price.
pub(crate) fn descend<T: Real, F>(opening: T, tol: T, mut grad: F) -> Result<(T, Vec<Bracket<T>>)>
where
    F: FnMut(T) -> Result<T>,
{
    let mut transcript = Vec::new();
    let (mut lo, mut hi) = (T::zero(), opening);
    let g_hi = grad(hi)?;
    transcript.push(Bracket {
        lower: lo,
        upper: hi,
        price: hi,
        gradient: g_hi,
    });
    if g_hi <= tol {
        return Ok((hi, transcript));
    }
    let g_lo = grad(lo)?;
    transcript.push(Bracket {
        lower: lo,
        upper: hi,
        price: lo,
        gradient: g_lo,
    });
    if g_lo >= -tol {
        return Ok((lo, transcript));
    }
    let (mut best, mut best_abs) = (hi, g_hi.abs());
    for _ in 0..400 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = grad(mid)?;
        if g > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        transcript.push(Bracket {
            lower: lo,
            upper: hi,
            price: mid,
            gradient: g,
        });
        if g.abs() < best_abs {
            best = mid;
            best_abs = g.abs();
        }
        if g.abs() <= tol {
            break;
        }
    }
    Ok((best, transcript))
}

/// Descending-price primal-dual mechanism: announce a price, collect best
/// responses, and lower the price until supply meets the user's demand.
pub fn run_dutch_auction<T: Real>(market: &Market<T>) -> Result<AuctionOutcome<T>> {
    let delta = market.delta();
    let tol = gradient_tolerance(delta);
    let (nu, transcript) = descend(market.opening_price(), tol, |nu| {
        Ok(dual_value_and_gradient(market, nu)?.gradient)
    })?;
    let point = dual_value_and_gradient(market, nu)?;
    let supplied = total(&point.allocations);
    let welfare = market.welfare(&point.allocations, point.routing);
    let outcome = if point.routing <= T::zero() {
        Outcome::AllCfmm
    } else if point.routing >= delta {
        Outcome::AllSolver
    } else {
        Outcome::Interior
    };
    Ok(AuctionOutcome {
        solution: MarketSolution {
            feasibility_gap: (point.routing - supplied).abs(),
            allocations: point.allocations,
            routing: point.routing,
            price: nu,
            welfare,
        },
        outcome,
        dual_value: point.value,
        duality_gap: (point.value - welfare).abs(),
        transcript,
    })
}
