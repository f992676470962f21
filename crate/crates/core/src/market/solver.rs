use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Concave, nondecreasing utility with `u(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum Utility<T: Real> {
    /// `a ln(1 + b x)`
    Log { a: T, b: T },
    /// `a x - q x² / 2`, held flat past its peak `a / q`
    Quadratic { a: T, q: T },
}

impl<T: Real> Utility<T> {
    fn validate(&self) -> Result<()> {
        let (a, b, name) = match *self {
            Utility::Log { a, b } => (a, b, "b"),
            Utility::Quadratic { a, q } => (a, q, "q"),
        };
        if !(a > T::zero() && a.is_finite()) {
            return Err(invalid("a", "must be positive and finite"));
        }
        if !(b > T::zero() && b.is_finite()) {
            return Err(invalid(name, "must be positive and finite"));
        }
        Ok(())
    }

    pub fn value(&self, x: T) -> T {
        match *self {
            Utility::Log { a, b } => a * (b * x).ln_1p(),
            Utility::Quadratic { a, q } => {
                let x = x.min(a / q);
                a * x - q * x * x / T::lit(2.0)
            }
        }
    }

    pub fn derivative(&self, x: T) -> T {
        match *self {
            Utility::Log { a, b } => a * b / (T::one() + b * x),
            Utility::Quadratic { a, q } => (a - q * x).max(T::zero()),
        }
    }

    /// Smallest quantity beyond which utility stops increasing.
    pub fn peak(&self) -> T {
        match *self {
            Utility::Log { .. } => T::infinity(),
            Utility::Quadratic { a, q } => a / q,
        }
    }
}

/// Convex cost `m x + q x² / 2`, infinite beyond an optional budget cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Cost<T: Real> {
    #[serde(default)]
    pub linear: T,
    #[serde(default)]
    pub quadratic: T,
}

impl<T: Real> Cost<T> {
    pub fn zero() -> Self {
        Self {
            linear: T::zero(),
            quadratic: T::zero(),
        }
    }

    pub fn value(&self, x: T) -> T {
        self.linear * x + self.quadratic * x * x / T::lit(2.0)
    }

    pub fn derivative(&self, x: T) -> T {
        self.linear + self.quadratic * x
    }
}

impl<T: Real> Default for Cost<T> {
    fn default() -> Self {
        Self::zero()
    }
}

/// A solver's quoted rate, utility and cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SolverRecord<T>", into = "SolverRecord<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SolverProfile<T: Real> {
    utility: Utility<T>,
    cost: Cost<T>,
    cap: Option<T>,
    quote_price: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct SolverRecord<T: Real> {
    #[serde(flatten)]
    utility: Utility<T>,
    #[serde(default)]
    cost: Cost<T>,
    #[serde(default)]
    cap: Option<T>,
    #[serde(default)]
    quote_price: T,
}

impl<T: Real> TryFrom<SolverRecord<T>> for SolverProfile<T> {
    type Error = Error;

    fn try_from(r: SolverRecord<T>) -> Result<Self> {
        let s = SolverProfile::new(r.utility, r.cost, r.quote_price)?;
        match r.cap {
            Some(cap) => s.with_cap(cap),
            None => Ok(s),
        }
    }
}

impl<T: Real> From<SolverProfile<T>> for SolverRecord<T> {
    fn from(s: SolverProfile<T>) -> Self {
        Self {
            utility: s.utility,
            cost: s.cost,
            cap: s.cap,
            quote_price: s.quote_price,
        }
    }
}

impl<T: Real> SolverProfile<T> {
    pub fn new(utility: Utility<T>, cost: Cost<T>, quote_price: T) -> Result<Self> {
        utility.validate()?;
        if !(cost.linear >= T::zero() && cost.linear.is_finite()) {
            return Err(invalid("cost.linear", "must be nonnegative and finite"));
        }
        if !(cost.quadratic >= T::zero() && cost.quadratic.is_finite()) {
            return Err(invalid("cost.quadratic", "must be nonnegative and finite"));
        }
        if !(quote_price >= T::zero() && quote_price.is_finite()) {
            return Err(invalid("quote_price", "must be nonnegative and finite"));
        }
        Ok(Self {
            utility,
            cost,
            cap: None,
            quote_price,
        })
    }

    /// Log utility `a ln(1 + x)` at zero cost and zero quote.
    pub fn log_utility(a: T) -> Result<Self> {
        Self::new(Utility::Log { a, b: T::one() }, Cost::zero(), T::zero())
    }

    pub fn with_cap(mut self, cap: T) -> Result<Self> {
        if !(cap > T::zero()) {
            return Err(invalid("cap", "must be positive"));
        }
        self.cap = Some(cap);
        Ok(self)
    }

    pub fn utility(&self) -> &Utility<T> {
        &self.utility
    }

    pub fn cost(&self) -> &Cost<T> {
        &self.cost
    }

    pub fn cap(&self) -> Option<T> {
        self.cap
    }

    pub fn quote_price(&self) -> T {
        self.quote_price
    }

    /// Largest quantity worth supplying at any price.
    pub fn upper_bound(&self) -> T {
        self.cap.unwrap_or(T::infinity()).min(self.utility.peak())
    }

    /// `u(x) - c(x)`, or `-∞` beyond the cap.
    pub fn surplus(&self, x: T) -> T {
        if self.cap.is_some_and(|c| x > c) {
            return T::neg_infinity();
        }
        self.utility.value(x) - self.cost.value(x)
    }

    /// `u'(x) - c'(x)`
    pub fn net_marginal(&self, x: T) -> T {
        self.utility.derivative(x) - self.cost.derivative(x)
    }

    /// `-α x - c(x) + u(x)`
    pub fn net_utility(&self, x: T) -> T {
        self.surplus(x) - self.quote_price * x
    }

    /// Whether filling the whole order `delta` at the quoted rate leaves the
    /// solver no worse off.
    pub fn accepts_quote(&self, delta: T) -> bool {
        self.net_utility(delta) >= T::zero()
    }

    /// Maximizer of `u(x) - c(x) - ν x` over `[0, cap]`.
    pub fn best_response(&self, nu: T) -> T {
        self.best_response_shifted(nu, T::zero())
    }

    /// Best response when the marginal cost carries an extra constant `shift`.
    pub fn best_response_shifted(&self, nu: T, shift: T) -> T {
        let price = nu + self.cost.linear + shift;
        if self.utility.derivative(T::zero()) <= price {
            return T::zero();
        }
        let q = self.cost.quadratic;
        let x = match self.utility {
            Utility::Log { a, b } => {
                // positive root of q b x² + (q + b price) x + price - a b
                let (qa, qb, qc) = (q * b, q + b * price, price - a * b);
                let disc = (qb * qb - T::lit(4.0) * qa * qc).sqrt();
                T::lit(2.0) * -qc / (qb + disc)
            }
            Utility::Quadratic { a, q: qu } => (a - price) / (qu + q),
        };
        x.max(T::zero()).min(self.upper_bound())
    }
}
