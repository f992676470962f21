use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Constant-product pool trading token 1 for token 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoolRecord<T>", into = "PoolRecord<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct CfmmExchange<T: Real> {
    r1: T,
    r2: T,
    fee: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct PoolRecord<T> {
    #[serde(rename = "R1")]
    r1: T,
    #[serde(rename = "R2")]
    r2: T,
    #[serde(default)]
    fee: T,
}

impl<T: Real> TryFrom<PoolRecord<T>> for CfmmExchange<T> {
    type Error = Error;

    fn try_from(r: PoolRecord<T>) -> Result<Self> {
        CfmmExchange::new(r.r1, r.r2, r.fee)
    }
}

impl<T: Real> From<CfmmExchange<T>> for PoolRecord<T> {
    fn from(c: CfmmExchange<T>) -> Self {
        Self {
            r1: c.r1,
            r2: c.r2,
            fee: c.fee,
        }
    }
}

impl<T: Real> CfmmExchange<T> {
    pub fn new(r1: T, r2: T, fee: T) -> Result<Self> {
        if !(r1 > T::zero() && r1.is_finite()) {
            return Err(invalid("R1", "must be positive and finite"));
        }
        if !(r2 > T::zero() && r2.is_finite()) {
            return Err(invalid("R2", "must be positive and finite"));
        }
        if !(fee >= T::zero() && fee < T::one()) {
            return Err(invalid("fee", "must lie in [0, 1)"));
        }
        Ok(Self { r1, r2, fee })
    }

    pub fn reserves(&self) -> (T, T) {
        (self.r1, self.r2)
    }

    pub fn fee(&self) -> T {
        self.fee
    }

    fn gamma(&self) -> T {
        T::one() - self.fee
    }

    /// Output `G(w)` of token 2 for `w` units of token 1.
    pub fn forward(&self, w: T) -> T {
        let gw = self.gamma() * w;
        self.r2 * gw / (self.r1 + gw)
    }

    /// Marginal rate `g(w) = G'(w)`.
    pub fn marginal(&self, w: T) -> T {
        let d = self.r1 + self.gamma() * w;
        self.r1 * self.r2 * self.gamma() / (d * d)
    }

    /// Amount `ỹ ∈ [0, δ]` the user routes to solvers at price `ν`, maximizing
    /// `G(δ - y) + ν y`.
    pub fn user_best_response(&self, delta: T, nu: T) -> T {
        if nu <= T::zero() {
            return T::zero();
        }
        let gamma = self.gamma();
        let w = ((self.r1 * self.r2 * gamma / nu).sqrt() - self.r1) / gamma;
        delta - w.max(T::zero()).min(delta)
    }

    /// `G(δ - y) + ν y`
    pub fn user_objective(&self, delta: T, y: T, nu: T) -> T {
        self.forward(delta - y) + nu * y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn routing_examples() {
        let c = CfmmExchange::<f64>::new(100.0, 100.0, 0.0).unwrap();
        assert_eq!(c.user_best_response(10.0, 0.0), 0.0);
        assert_eq!(c.user_best_response(10.0, 1.0), 10.0);
        assert_eq!(c.user_best_response(10.0, 1e6), 10.0);
        assert_eq!(c.forward(0.0), 0.0);
        // g(δ) = 10⁴/110² bounds the all-pool region
        assert_eq!(c.user_best_response(10.0, 0.8), 0.0);
        let y = c.user_best_response(10.0, 0.9);
        assert!(y > 0.0 && y < 10.0);
        assert!((c.marginal(10.0 - y) - 0.9).abs() < 1e-14);
    }

    #[test]
    fn json_and_validation() {
        let c: CfmmExchange<f64> = serde_json::from_str(r#"{"R1": 50, "R2": 80, "fee": 0.003}"#).unwrap();
        assert_eq!(c.reserves(), (50.0, 80.0));
        assert!(serde_json::from_str::<CfmmExchange<f64>>(r#"{"R1": 50, "R2": 80, "fee": 1.0}"#).is_err());
        assert!(CfmmExchange::new(0.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn pool_shape(r1 in 1.0f64..1e3, r2 in 1.0f64..1e3, fee in 0.0f64..0.1, w in 0.0f64..100.0) {
            let c = CfmmExchange::new(r1, r2, fee).unwrap();
            let h = 1e-4;
            prop_assert!(c.forward(w + h) >= c.forward(w));
            prop_assert!(c.forward(w + 2.0 * h) - 2.0 * c.forward(w + h) + c.forward(w) <= 1e-12);
            let fd = (c.forward(w + h) - c.forward(w)) / h;
            prop_assert!((fd - c.marginal(w + h / 2.0)).abs() < 1e-6 * c.marginal(w).max(1.0));
        }

        #[test]
        fn routing_maximizes(delta in 0.1f64..50.0, nu in 0.0f64..3.0) {
            let c = CfmmExchange::new(100.0, 120.0, 0.003).unwrap();
            let y = c.user_best_response(delta, nu);
            prop_assert!((0.0..=delta).contains(&y));
            let best = c.user_objective(delta, y, nu);
            for i in 0..=500 {
                let z = delta * i as f64 / 500.0;
                prop_assert!(c.user_objective(delta, z, nu) <= best + 1e-10);
            }
        }
    }
}
