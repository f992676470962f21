//! Deterministic welfare model: a user swaps `δ` units of token 1 either
//! through a constant-product pool or with solvers, and a single price `ν`
//! clears the market.
//!
//! The welfare program is
//!
//! ```text
//! maximize  G(δ - y) + Σ_k u_k(x_k) - c_k(x_k)
//! subject to  y = Σ_k x_k,  0 <= y <= δ,  x >= 0
//! ```
//!
//! and `ν` is the multiplier on the coupling constraint.

mod cfmm;
mod congestion;
mod dual;
mod oracle;
mod solver;

pub use cfmm::CfmmExchange;
pub use congestion::{congested_supply, congestion_comparison, CongestionComparison, CrossCongestion};
pub use dual::{dual_value_and_gradient, run_dutch_auction, AuctionOutcome, Bracket, DualPoint, Outcome};
pub use oracle::{direct_welfare_oracle, MAX_ORACLE_SOLVERS};
pub use solver::{Cost, SolverProfile, Utility};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarketRecord<T>", into = "MarketRecord<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Market<T: Real> {
    solvers: Vec<SolverProfile<T>>,
    cfmm: CfmmExchange<T>,
    delta: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct MarketRecord<T: Real> {
    #[serde(default)]
    solvers: Vec<SolverProfile<T>>,
    cfmm: CfmmExchange<T>,
    delta: T,
}

impl<T: Real> TryFrom<MarketRecord<T>> for Market<T> {
    type Error = Error;

    fn try_from(r: MarketRecord<T>) -> Result<Self> {
        Market::new(r.solvers, r.cfmm, r.delta)
    }
}

impl<T: Real> From<Market<T>> for MarketRecord<T> {
    fn from(m: Market<T>) -> Self {
        Self {
            solvers: m.solvers,
            cfmm: m.cfmm,
            delta: m.delta,
        }
    }
}

impl<T: Real> Market<T> {
    pub fn new(solvers: Vec<SolverProfile<T>>, cfmm: CfmmExchange<T>, delta: T) -> Result<Self> {
        if !(delta >= T::zero() && delta.is_finite()) {
            return Err(invalid("delta", "must be nonnegative and finite"));
        }
        Ok(Self { solvers, cfmm, delta })
    }

    pub fn solvers(&self) -> &[SolverProfile<T>] {
        &self.solvers
    }

    pub fn cfmm(&self) -> &CfmmExchange<T> {
        &self.cfmm
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Objective of the welfare program at routing `y` and allocations `x`.
    pub fn welfare(&self, allocations: &[T], routing: T) -> T {
        let mut w = self.cfmm.forward(self.delta - routing);
        for (s, &x) in self.solvers.iter().zip(allocations) {
            w = w + s.surplus(x);
        }
        w
    }

    /// Price above which nobody supplies and the user routes everything to
    /// solvers.
    pub fn opening_price(&self) -> T {
        self.solvers
            .iter()
            .map(|s| s.net_marginal(T::zero()))
            .fold(self.cfmm.marginal(T::zero()), T::max)
    }
}

/// Allocations, routing and price of a solved market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSolution<T> {
    pub allocations: Vec<T>,
    pub routing: T,
    pub price: T,
    pub welfare: T,
    /// `|y - Σ x|`
    pub feasibility_gap: T,
}

impl<T: Real> MarketSolution<T> {
    /// Largest first-order violation: `|u' - c' - ν|` at interior allocations,
    /// the one-sided violation at caps and zeros, and `|g(δ - y) - ν|` at an
    /// interior routing.
    pub fn stationarity_residual(&self, market: &Market<T>) -> T {
        let nu = self.price;
        let mut worst = T::zero();
        let scale = T::one().max(nu.abs());
        let eps = T::lit(1e-12) * scale;
        for (s, &x) in market.solvers().iter().zip(&self.allocations) {
            let m = s.net_marginal(x);
            let r = if x <= eps {
                (m - nu).max(T::zero())
            } else if x >= s.upper_bound() - eps * T::one().max(x) {
                (nu - m).max(T::zero())
            } else {
                (m - nu).abs()
            };
            worst = worst.max(r);
        }
        let delta = market.delta();
        let y = self.routing;
        let g = market.cfmm().marginal(delta - y);
        let r = if y <= eps {
            (nu - g).max(T::zero())
        } else if y >= delta - eps * T::one().max(delta) {
            (g - nu).max(T::zero())
        } else {
            (g - nu).abs()
        };
        worst.max(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn market_json() {
        let text = r#"{
            "solvers": [
                {"family": "log", "params": {"a": 1.0, "b": 1.0}},
                {"family": "quadratic", "params": {"a": 1.2, "q": 0.5}, "cost": {"linear": 0.1, "quadratic": 0.2}, "cap": 4.0}
            ],
            "cfmm": {"R1": 100, "R2": 100, "fee": 0.0},
            "delta": 10
        }"#;
        let m: Market<f64> = serde_json::from_str(text).unwrap();
        assert_eq!(m.solvers().len(), 2);
        assert_eq!(m.solvers()[1].cap(), Some(4.0));
        assert_eq!(m.opening_price(), 1.2 - 0.1);
        let again: Market<f64> = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, again);
        let bad = r#"{"cfmm": {"R1": 100, "R2": 100}, "delta": -1}"#;
        assert!(serde_json::from_str::<Market<f64>>(bad).is_err());
    }
}
