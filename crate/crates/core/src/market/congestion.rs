use serde::{Deserialize, Serialize};

use super::dual::{descend, dual_value_and_gradient, gradient_tolerance, run_dutch_auction, total};
use super::Market;
use crate::error::{invalid, Result};
use crate::scalar::Real;

pub const MAX_ITERATIONS: usize = 10_000;
const DAMPING: f64 = 0.5;

/// Joint cost `c̃_k(x) = c_k(x_k) + β x_k Σ_{j≠k} x_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCongestion<T> {
    pub beta: T,
}

impl<T: Real> CrossCongestion<T> {
    pub fn new(beta: T) -> Result<Self> {
        if !(beta >= T::zero() && beta.is_finite()) {
            return Err(invalid("beta", "must be nonnegative and finite"));
        }
        Ok(Self { beta })
    }

    pub fn joint_cost(&self, market: &Market<T>, k: usize, x: &[T]) -> T {
        let others = total(x) - x[k];
        market.solvers()[k].cost().value(x[k]) + self.beta * x[k] * others
    }
}

/// Damped simultaneous best responses at price `nu`, starting from `x`.
/// Returns `false` if the iteration does not settle within the cap; `x`
/// then holds the last iterate.
pub fn congested_supply<T: Real>(market: &Market<T>, congestion: &CrossCongestion<T>, nu: T, x: &mut [T]) -> bool {
    let damping = T::lit(DAMPING);
    let mut next = vec![T::zero(); x.len()];
    for _ in 0..MAX_ITERATIONS {
        let sum = total(x);
        let mut change = T::zero();
        for (k, s) in market.solvers().iter().enumerate() {
            let br = s.best_response_shifted(nu, congestion.beta * (sum - x[k]));
            if !br.is_finite() {
                return false;
            }
            change = change.max((br - x[k]).abs());
            next[k] = x[k] + damping * (br - x[k]);
        }
        let scale = x.iter().fold(T::one(), |m, &v| m.max(v));
        x.copy_from_slice(&next);
        if change <= T::lit(1e-13) * scale {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionComparison<T> {
    pub independent_price: T,
    /// `None` when the best-response iteration failed to settle.
    pub congested_price: Option<T>,
    /// `G(δ - ỹ) + ν ỹ` at the independent price.
    pub independent_output: T,
    pub congested_output: Option<T>,
    pub congested_allocations: Option<Vec<T>>,
}

impl<T: Real> CongestionComparison<T> {
    pub fn converged(&self) -> bool {
        self.congested_price.is_some()
    }
}

fn user_output<T: Real>(market: &Market<T>, nu: T) -> T {
    let y = market.cfmm().user_best_response(market.delta(), nu);
    market.cfmm().user_objective(market.delta(), y, nu)
}

/// Clearing prices without and with cross-solver congestion.
pub fn congestion_comparison<T: Real>(
    market: &Market<T>,
    congestion: &CrossCongestion<T>,
) -> Result<CongestionComparison<T>> {
    let independent = run_dutch_auction(market)?;
    let nu_i = independent.solution.price;
    let out_i = user_output(market, nu_i);
    if congestion.beta == T::zero() || market.solvers().len() < 2 {
        return Ok(CongestionComparison {
            independent_price: nu_i,
            congested_price: Some(nu_i),
            independent_output: out_i,
            congested_output: Some(out_i),
            congested_allocations: Some(independent.solution.allocations),
        });
    }

    let delta = market.delta();
    let mut x = vec![T::zero(); market.solvers().len()];
    let mut settled = true;
    let search = descend(market.opening_price(), gradient_tolerance(delta), |nu| {
        if nu == T::zero() {
            // Supply at a zero price is positive under congestion exactly
            // when it is without, which is all the search needs here.
            return Ok(dual_value_and_gradient(market, nu)?.gradient);
        }
        if !congested_supply(market, congestion, nu, &mut x) {
            settled = false;
        }
        Ok(market.cfmm().user_best_response(delta, nu) - total(&x))
    });
    let (nu_c, _) = search?;
    let mut allocations = vec![T::zero(); market.solvers().len()];
    let ok = settled && congested_supply(market, congestion, nu_c, &mut allocations);
    Ok(CongestionComparison {
        independent_price: nu_i,
        congested_price: ok.then_some(nu_c),
        independent_output: out_i,
        congested_output: ok.then(|| user_output(market, nu_c)),
        congested_allocations: ok.then_some(allocations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{CfmmExchange, Cost, SolverProfile, Utility};

    fn two_solver_market() -> Market<f64> {
        let a = SolverProfile::new(Utility::Log { a: 1.5, b: 1.0 }, Cost { linear: 0.0, quadratic: 0.1 }, 0.0).unwrap();
        let b = SolverProfile::new(Utility::Log { a: 1.2, b: 2.0 }, Cost { linear: 0.05, quadratic: 0.2 }, 0.0).unwrap();
        Market::new(vec![a, b], CfmmExchange::new(100.0, 100.0, 0.0).unwrap(), 10.0).unwrap()
    }

    #[test]
    fn cost_consistency() {
        let m = two_solver_market();
        let c = CrossCongestion::new(0.5).unwrap();
        assert_eq!(c.joint_cost(&m, 0, &[2.0, 0.0]), m.solvers()[0].cost().value(2.0));
        let base = c.joint_cost(&m, 0, &[2.0, 1.0]);
        assert!(c.joint_cost(&m, 0, &[2.0, 1.1]) > base);
        assert!(c.joint_cost(&m, 0, &[2.1, 1.0]) > base);
        assert!(CrossCongestion::new(-0.1).is_err());
    }

    #[test]
    fn congestion_lowers_price() {
        let m = two_solver_market();
        let r = congestion_comparison(&m, &CrossCongestion::new(0.5).unwrap()).unwrap();
        assert!(r.converged());
        assert!(r.congested_price.unwrap() < r.independent_price);
        assert!(r.congested_output.unwrap() <= r.independent_output);
    }

    #[test]
    fn identity_cases() {
        let m = two_solver_market();
        let r = congestion_comparison(&m, &CrossCongestion::new(0.0).unwrap()).unwrap();
        assert_eq!(r.congested_price, Some(r.independent_price));
        let single = Market::new(vec![m.solvers()[0]], *m.cfmm(), 10.0).unwrap();
        let r = congestion_comparison(&single, &CrossCongestion::new(0.5).unwrap()).unwrap();
        assert_eq!(r.congested_price, Some(r.independent_price));
    }

    #[test]
    fn fixed_point_is_mutual_best_response() {
        let m = two_solver_market();
        let c = CrossCongestion::new(0.5).unwrap();
        let mut x = vec![0.0; 2];
        assert!(congested_supply(&m, &c, 0.3, &mut x));
        for k in 0..2 {
            let br = m.solvers()[k].best_response_shifted(0.3, 0.5 * x[1 - k]);
            assert!((br - x[k]).abs() < 1e-10);
        }
    }
}
