//! Equilibrium bidding and solver profits in the first-price (Dutch) auction
//! for a single intent.
//!
//! Two counts appear in the formulas and are easy to confuse:
//!
//! * `num_bidders` (k): solvers present in the auction. Bid shading integrates
//!   `F^(k-1)`.
//! * `num_competitors` (k - 1): the *other* solvers a given bidder faces. The
//!   interim profit `S(p, k')` and ex-ante profit `S(k')` are indexed by this
//!   count, so `S(0)` is the profit of a lone entrant.
//!
//! [`AuctionContext`] stores the bidder count and exposes the competitor count
//! through [`AuctionContext::num_competitors`].

use serde::{Deserialize, Serialize};

use crate::distributions::{PriceDistribution, PriceFamily};
use crate::error::{invalid, Error, Result};
use crate::quadrature::Quadrature;
use crate::scalar::{Extended, Real};
use crate::stats::{self, Estimate, RunningStats};

const LABEL_FIRST_PRICE: u64 = 0xF1_0000;

/// A first-price auction against a public quote `reserve` (the CFMM price p*).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct AuctionContext<T: Real> {
    pub price_dist: PriceDistribution<T>,
    pub reserve: T,
    num_bidders: u32,
}

impl<T: Real> AuctionContext<T> {
    pub fn new(price_dist: PriceDistribution<T>, reserve: T, num_bidders: u32) -> Result<Self> {
        if !(reserve.is_finite() && reserve >= T::zero()) {
            return Err(invalid("reserve", format!("must be finite and nonnegative, got {reserve}")));
        }
        if num_bidders == 0 {
            return Err(invalid("num_bidders", "at least one bidder is required"));
        }
        Ok(Self {
            price_dist,
            reserve,
            num_bidders,
        })
    }

    /// Context in which each bidder faces `num_competitors` rivals.
    pub fn with_competitors(price_dist: PriceDistribution<T>, reserve: T, num_competitors: u32) -> Result<Self> {
        Self::new(price_dist, reserve, num_competitors + 1)
    }

    pub fn num_bidders(&self) -> u32 {
        self.num_bidders
    }

    pub fn num_competitors(&self) -> u32 {
        self.num_bidders - 1
    }

    fn check_price(&self, p: T) -> Result<()> {
        if p < self.reserve || p.is_nan() {
            Err(Error::BelowReserve {
                price: p.to_f64_lossy(),
                reserve: self.reserve.to_f64_lossy(),
            })
        } else {
            Ok(())
        }
    }

    /// Equilibrium bid of a solver whose true price is `p`:
    /// `p - ∫_{p*}^{p} F^(k-1) / F^(k-1)(p)`.
    ///
    /// Where `F(p) = 0` the formula is 0/0 and the bid collapses to the reserve.
    pub fn shade_bid(&self, p: T) -> Result<T> {
        self.check_price(p)?;
        let m = self.num_competitors();
        if m == 0 {
            return Ok(self.reserve);
        }
        let weight = self.price_dist.cdf(p).powi(m as i32);
        if weight <= T::zero() {
            return Ok(self.reserve);
        }
        let area = self.price_dist.cdf_power_integral(self.reserve, p, m)?;
        Ok((p - area / weight).max(self.reserve).min(p))
    }

    /// Interim expected profit `S(p, k') = ∫_{p*}^{p} F^{k'}`, with `k'` the
    /// number of competitors.
    pub fn interim_profit(&self, p: T) -> Result<T> {
        self.check_price(p)?;
        self.price_dist
            .cdf_power_integral(self.reserve, p, self.num_competitors())
    }

    /// Ex-ante expected profit `S(k')` of a solver facing `k'` competitors.
    pub fn exante_profit(&self) -> Result<Extended<T>> {
        exante_profit(&self.price_dist, self.reserve, self.num_competitors())
    }

    /// Simulates the auction with sincere-equilibrium bids.
    ///
    /// Each trial draws one price per bidder, shades every bid above the
    /// reserve, and fills the highest bid. Unfilled trials contribute zero
    /// revenue and profit.
    pub fn simulate_first_price(&self, trials: u64, seed: u64) -> Result<FirstPriceRecord<T>> {
        if trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.num_bidders < 2 {
            return Err(invalid("num_bidders", "simulation needs at least two bidders"));
        }
        let k = self.num_bidders;
        let parts = stats::run_chunked(trials, seed, LABEL_FIRST_PRICE | k as u64, |rng, n| {
            let mut winner = RunningStats::new();
            let mut revenue = RunningStats::new();
            let mut profit = RunningStats::new();
            let mut fills = 0u64;
            for _ in 0..n {
                let mut best: Option<(T, T)> = None;
                for _ in 0..k {
                    let p = self.price_dist.sample(rng);
                    if p <= self.reserve {
                        continue;
                    }
                    let bid = self.shade_bid(p)?;
                    if best.is_none_or(|(b, _)| bid > b) {
                        best = Some((bid, p));
                    }
                }
                match best {
                    Some((bid, p)) => {
                        fills += 1;
                        winner.push(p);
                        revenue.push(bid);
                        profit.push((p - bid) / T::from_count(k as u64));
                    }
                    None => {
                        winner.push(T::zero());
                        revenue.push(T::zero());
                        profit.push(T::zero());
                    }
                }
            }
            Ok::<_, Error>((winner, revenue, profit, fills))
        });
        let mut winner = RunningStats::new();
        let mut revenue = RunningStats::new();
        let mut profit = RunningStats::new();
        let mut fills = 0;
        for part in parts {
            let (w, r, p, f) = part?;
            winner.merge(&w);
            revenue.merge(&r);
            profit.merge(&p);
            fills += f;
        }
        Ok(FirstPriceRecord {
            winner_price: winner.estimate(),
            revenue: revenue.estimate(),
            solver_profit: profit.estimate(),
            fill_rate: T::from_count(fills) / T::from_count(trials),
        })
    }
}

/// Empirical summary of a simulated first-price auction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstPriceRecord<T> {
    /// True price of the winning solver.
    pub winner_price: Estimate<T>,
    /// Winning bid, i.e. the price the user receives from the auction.
    pub revenue: Estimate<T>,
    /// Profit per participating solver.
    pub solver_profit: Estimate<T>,
    pub fill_rate: T,
}

/// Closed-form `S(k)` where one exists: exponential and uniform prices with
/// a zero reserve.
pub fn exante_profit_closed_form<T: Real>(dist: &PriceDistribution<T>, reserve: T, num_competitors: u32) -> Option<T> {
    if reserve != T::zero() {
        return None;
    }
    let k = T::from_count(num_competitors as u64);
    match dist.family() {
        PriceFamily::Exponential { rate } => Some(((k + T::one()) * *rate).recip()),
        PriceFamily::UniformUnit => Some(((k + T::one()) * (k + T::lit(2.0))).recip()),
        _ => None,
    }
}

/// `S(k) = ∫_{p*} F^k (1 - F)` by adaptive quadrature, with the region beyond
/// the truncation point added analytically.
pub fn exante_profit_quadrature<T: Real>(
    dist: &PriceDistribution<T>,
    reserve: T,
    num_competitors: u32,
) -> Result<Extended<T>> {
    if dist.is_heavy_tailed() {
        return Ok(Extended::Infinite);
    }
    let (_, upper) = dist.support();
    if reserve >= upper {
        return Ok(Extended::Finite(T::zero()));
    }
    let k = num_competitors as i32;
    let pts = dist.integration_breaks(reserve);
    let q = Quadrature::with_tolerance(T::lit(1e-12));
    let body = q.integrate_with_breaks(
        |x| {
            let s = dist.survival(x);
            (T::one() - s).powi(k) * s
        },
        &pts,
    )?;
    let end = pts[pts.len() - 1].max(reserve);
    // Below the support F = 0, so only the lone-entrant integrand survives there.
    let (lower, _) = dist.support();
    let floor = if k == 0 { (lower - reserve).max(T::zero()) } else { T::zero() };
    let value = floor + body.value + survival_tail_integral(dist, end);
    if !value.is_finite() {
        return Err(Error::Divergent);
    }
    Ok(Extended::Finite(value))
}

/// `∫_x^∞ (1 - F)`, exact for exponential and standard Pareto laws and
/// asymptotic for the generalized Pareto law.
fn survival_tail_integral<T: Real>(dist: &PriceDistribution<T>, x: T) -> T {
    let s = dist.survival(x);
    match *dist.family() {
        PriceFamily::Exponential { rate } => s / rate,
        PriceFamily::UniformUnit => T::zero(),
        PriceFamily::GeneralizedPareto { location, shape, tail, .. } => {
            let a = tail / shape;
            (x - location) * s / (a - T::one())
        }
        PriceFamily::StandardPareto { tail, .. } => x * s / (tail - T::one()),
    }
}

/// `S(k)`: closed form when available, quadrature otherwise; `Infinite` when
/// the price law has infinite mean.
pub fn exante_profit<T: Real>(dist: &PriceDistribution<T>, reserve: T, num_competitors: u32) -> Result<Extended<T>> {
    if let Some(v) = exante_profit_closed_form(dist, reserve, num_competitors) {
        return Ok(Extended::Finite(v));
    }
    exante_profit_quadrature(dist, reserve, num_competitors)
}

/// `S` extended to real competitor counts by linear interpolation between
/// neighbouring integers.
pub fn exante_profit_interpolated<T: Real>(dist: &PriceDistribution<T>, reserve: T, num_competitors: T) -> Result<Extended<T>> {
    if !(num_competitors >= T::zero()) {
        return Err(invalid("num_competitors", "must be nonnegative"));
    }
    let lo = num_competitors.floor();
    let frac = num_competitors - lo;
    let k = lo.to_u32().ok_or_else(|| invalid("num_competitors", "too large"))?;
    let a = exante_profit(dist, reserve, k)?;
    if frac == T::zero() {
        return Ok(a);
    }
    let b = exante_profit(dist, reserve, k + 1)?;
    Ok(match (a, b) {
        (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + frac * (b - a)),
        _ => Extended::Infinite,
    })
}
